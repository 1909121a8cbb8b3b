void tl_0004(const long N, double* const* L, const double* const* R0, const double* const* R1)
{
  for(int i=0; i<3; ++i){
    for(long x=0; x<N; ++x){
      L[i][x] = R0[i][x] + R1[i][x];
    }
  }
}
