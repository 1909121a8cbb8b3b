__global__ void g_0013(const int N, double** __restrict__ TDm00, const double* const* __restrict__ TDm01, const double* const* __restrict__ TDm02, const double* __restrict__ Dm00, const double d00){
    const int j = threadIdx.y;
    const int x = blockIdx.x*blockDim.x + threadIdx.x;
    if ((x<N)&&(j<3)){
      for(int i=j; i<3; ++i){
        TDm00[i+3*j][x] = d00*Dm00[x]*TDm01[i+3*j][x] + TDm02[i][x]*TDm02[j][x];
      }
    }
}

int CUDAWrapper_g_0013(const int N, double** TDm00, const double* const* TDm01, const double* const* TDm02, const double* Dm00, const double d00){
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
    g_0013<<<nblocks,blocksize>>>(N, TDm00, TDm01, TDm02, Dm00, d00);
    return 0;
}
