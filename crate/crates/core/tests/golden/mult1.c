void tl_0007(const long N, double* const* L, const double* const* R0, const double* const* R1)
{
  for(int j=0; j<3; ++j){
    for(int i=0; i<3; ++i){
      for(long x=0; x<N; ++x){
        L[i+3*j][x] = R0[i][x]*R1[j][x];
      }
    }
  }
}
