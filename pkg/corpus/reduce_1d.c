#include <stdio.h>

static unsigned long long A[64];
static unsigned long long S[64];

int main(void)
{
    int i, j, k, r;
    unsigned long long h = 0;
    (void)j; (void)k;
    for (i = 0; i < 64; i++)
        A[i] = i * 2654435761ULL + 773ULL;
    for (i = 0; i < 64; i++)
        S[i] = i * 2654435761ULL + 23ULL;
    for (r = 0; r < 100; r++) {
#pragma looplearner begin
for (i = 0; i < 64; i++) {
    S[0] = S[0] + A[i];
}
#pragma looplearner end
    }
    for (i = 0; i < 64; i++)
        h = h * 31ULL + S[i];
    printf("checksum %llu\n", h);
    return 0;
}
