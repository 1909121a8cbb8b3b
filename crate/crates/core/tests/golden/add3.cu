__global__ void g_0006(const int N, double** __restrict__ TDm00, const double* const* __restrict__ TDm01, const double* const* __restrict__ TDm02, const double* const* __restrict__ TDm03, const double* const* __restrict__ TDm04){
    const int i = threadIdx.y;
    const int x = blockIdx.x*blockDim.x + threadIdx.x;
    if ((x<N)&&(i<3)){
      TDm00[i][x] = TDm01[i][x] + TDm02[i][x] + TDm03[i][x] + TDm04[i][x];
    }
}

int CUDAWrapper_g_0006(const int N, double** TDm00, const double* const* TDm01, const double* const* TDm02, const double* const* TDm03, const double* const* TDm04){
    if (N <= 0) return 0;
    const int blocksize_x = 64;
    if (N > 65535*blocksize_x) return 1;
    const int nblocks_x = N/blocksize_x + (N%blocksize_x ? 1 : 0);
    const int blocksize_y = 3;
    const int nblocks_y = 1;
    const int blocksize_z = 1;
    const int nblocks_z = 1;
    const dim3 blocksize(blocksize_x, blocksize_y, blocksize_z);
    const dim3 nblocks(nblocks_x, nblocks_y, nblocks_z);
    g_0006<<<nblocks,blocksize>>>(N, TDm00, TDm01, TDm02, TDm03, TDm04);
    return 0;
}
