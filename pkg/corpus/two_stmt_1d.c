#include <stdio.h>

static unsigned long long A[64];
static unsigned long long B[64];
static unsigned long long C[64];
static unsigned long long D[64];

int main(void)
{
    int i, j, k, r;
    unsigned long long h = 0;
    (void)j; (void)k;
    for (i = 0; i < 64; i++)
        A[i] = i * 2654435761ULL + 773ULL;
    for (i = 0; i < 64; i++)
        B[i] = i * 2654435761ULL + 694ULL;
    for (i = 0; i < 64; i++)
        C[i] = i * 2654435761ULL + 656ULL;
    for (i = 0; i < 64; i++)
        D[i] = i * 2654435761ULL + 569ULL;
    for (r = 0; r < 150; r++) {
#pragma looplearner begin
for (i = 0; i < 64; i++) {
    C[i] = A[i] * 2;
    D[i] = B[i] + 7;
}
#pragma looplearner end
    }
    for (i = 0; i < 64; i++)
        h = h * 31ULL + C[i];
    for (i = 0; i < 64; i++)
        h = h * 31ULL + D[i];
    printf("checksum %llu\n", h);
    return 0;
}
