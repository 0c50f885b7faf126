#include <stdio.h>

static unsigned long long A[64][64];
static unsigned long long B[64][64];
static unsigned long long C[64][64];

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
    for (r = 0; r < 6; r++) {
#pragma looplearner begin
for (i = 0; i < 24; i++) {
    for (j = 0; j < 24; j++) {
        for (k = 1; k < 24; k++) {
            C[i][j] = C[i][j] + A[i][k] * B[k][j];
        }
    }
}
#pragma looplearner end
    }
    for (i = 0; i < 64; i++)
        for (j = 0; j < 64; j++)
            h = h * 31ULL + C[i][j];
    printf("checksum %llu\n", h);
    return 0;
}
