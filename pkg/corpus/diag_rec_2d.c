#include <stdio.h>

static unsigned long long A[64][64];

int main(void)
{
    int i, j, k, r;
    unsigned long long h = 0;
    (void)j; (void)k;
    for (i = 0; i < 64; i++)
        for (j = 0; j < 64; j++)
            A[i][j] = (i * 64 + j) * 1315423911ULL + 773ULL;
    for (r = 0; r < 8; r++) {
#pragma looplearner begin
for (i = 1; i < 64; i++) {
    for (j = 1; j < 64; j++) {
        A[i][j] = A[i - 1][j - 1] + 1;
    }
}
#pragma looplearner end
    }
    for (i = 0; i < 64; i++)
        for (j = 0; j < 64; j++)
            h = h * 31ULL + A[i][j];
    printf("checksum %llu\n", h);
    return 0;
}
