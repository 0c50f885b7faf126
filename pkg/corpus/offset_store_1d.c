#include <stdio.h>

static unsigned long long A[64];
static unsigned long long B[64];

int main(void)
{
    int i, j, k, r;
    unsigned long long h = 0;
    (void)j; (void)k;
    for (i = 0; i < 64; i++)
        A[i] = i * 2654435761ULL + 773ULL;
    for (i = 0; i < 64; i++)
        B[i] = i * 2654435761ULL + 694ULL;
    for (r = 0; r < 200; r++) {
#pragma looplearner begin
for (i = 0; i < 32; i++) {
    B[i + 32] = A[i] * 11;
}
#pragma looplearner end
    }
    for (i = 0; i < 64; i++)
        h = h * 31ULL + B[i];
    printf("checksum %llu\n", h);
    return 0;
}
