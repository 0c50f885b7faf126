#include <stdio.h>

static unsigned long long A[64][64];
static unsigned long long B[64][64];
static unsigned long long C[64][64];
static unsigned long long D[64][64];

int main(void)
{
    int i, j, k, r;
    unsigned long long h = 0;
    (void)j; (void)k;
    for (i = 0; i < 64; i++)
        for (j = 0; j < 64; j++)
            A[i][j] = (i * 64 + j) * 1315423911ULL + 773ULL;
    for (i = 0; i < 64; i++)
        for (j = 0; j < 64; j++)
            B[i][j] = (i * 64 + j) * 1315423911ULL + 694ULL;
    for (i = 0; i < 64; i++)
        for (j = 0; j < 64; j++)
            C[i][j] = (i * 64 + j) * 1315423911ULL + 656ULL;
    for (i = 0; i < 64; i++)
        for (j = 0; j < 64; j++)
            D[i][j] = (i * 64 + j) * 1315423911ULL + 569ULL;
    for (r = 0; r < 8; r++) {
#pragma looplearner begin
for (i = 0; i < 48; i++) {
    for (j = 0; j < 48; j++) {
        C[i][j] = A[i][j] * 2;
        D[i][j] = B[i][j] + 1;
    }
}
#pragma looplearner end
    }
    for (i = 0; i < 64; i++)
        for (j = 0; j < 64; j++)
            h = h * 31ULL + C[i][j];
    for (i = 0; i < 64; i++)
        for (j = 0; j < 64; j++)
            h = h * 31ULL + D[i][j];
    printf("checksum %llu\n", h);
    return 0;
}
