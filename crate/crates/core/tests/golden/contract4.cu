__global__ void g_0001(const int N, double** __restrict__ TDm00, const double* const* __restrict__ TDm01, const double* const* __restrict__ TDm02){
    const int a = threadIdx.y;
    const int b = blockIdx.y;
    const int x = blockIdx.x*blockDim.x + threadIdx.x;
    if ((x<N)&&(a<4)&&(b<4)){
      TDm00[a+4*b][x] = TDm01[a+4*0][x]*TDm02[0+4*b][x] + TDm01[a+4*1][x]*TDm02[1+4*b][x] + TDm01[a+4*2][x]*TDm02[2+4*b][x] + TDm01[a+4*3][x]*TDm02[3+4*b][x];
    }
}

int CUDAWrapper_g_0001(const int N, double** TDm00, const double* const* TDm01, const double* const* TDm02){
    if (N <= 0) return 0;
    const int blocksize_x = 64;
    if (N > 65535*blocksize_x) return 1;
    const int nblocks_x = N/blocksize_x + (N%blocksize_x ? 1 : 0);
    const int blocksize_y = 4;
    const int nblocks_y = 4;
    const int blocksize_z = 1;
    const int nblocks_z = 1;
    const dim3 blocksize(blocksize_x, blocksize_y, blocksize_z);
    const dim3 nblocks(nblocks_x, nblocks_y, nblocks_z);
    g_0001<<<nblocks,blocksize>>>(N, TDm00, TDm01, TDm02);
    return 0;
}
