__global__ void g_0003(const int N, double** __restrict__ TDm00, const double* const* __restrict__ TDm01){
    const int i = threadIdx.y;
    const int j = blockIdx.y;
    const int k = threadIdx.z;
    const int x = blockIdx.x*blockDim.x + threadIdx.x;
    if ((x<N)&&(i<3)&&(j<3)&&(k<3)){
      TDm00[i+3*j+9*k][x] = TDm01[i+3*j+9*k][x];
    }
}

int CUDAWrapper_g_0003(const int N, double** TDm00, const double* const* TDm01){
    if (N <= 0) return 0;
    const int blocksize_x = 32;
    if (N > 65535*blocksize_x) return 1;
    const int nblocks_x = N/blocksize_x + (N%blocksize_x ? 1 : 0);
    const int blocksize_y = 3;
    const int nblocks_y = 3;
    const int blocksize_z = 3;
    const int nblocks_z = 1;
    const dim3 blocksize(blocksize_x, blocksize_y, blocksize_z);
    const dim3 nblocks(nblocks_x, nblocks_y, nblocks_z);
    g_0003<<<nblocks,blocksize>>>(N, TDm00, TDm01);
    return 0;
}
