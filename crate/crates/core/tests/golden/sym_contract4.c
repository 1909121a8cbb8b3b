void tl_0001(const long N, double* const* L, const double* const* R0, const double* const* R1)
{
  for(int b=0; b<4; ++b){
    for(int a=b; a<4; ++a){
      for(long x=0; x<N; ++x){
        double s0 = 0;
        for(int c=0; c<4; ++c){
          s0 += R0[a+4*c][x]*R1[c+4*b][x];
        }
        L[a+4*b][x] = s0;
      }
    }
  }
}
