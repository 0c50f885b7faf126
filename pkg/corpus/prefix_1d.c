#include <stdio.h>

static unsigned long long A[64];

int main(void)
{
    int i, j, k, r;
    unsigned long long h = 0;
    (void)j; (void)k;
    for (i = 0; i < 64; i++)
        A[i] = i * 2654435761ULL + 773ULL;
    for (r = 0; r < 100; r++) {
#pragma looplearner begin
for (i = 1; i < 64; i++) {
    A[i] = A[i - 1] + A[i];
}
#pragma looplearner end
    }
    for (i = 0; i < 64; i++)
        h = h * 31ULL + A[i];
    printf("checksum %llu\n", h);
    return 0;
}
