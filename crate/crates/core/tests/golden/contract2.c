void tl_0011(const long N, double* const* L, const double* const* R0, const double* const* R1, const double* const* R2)
{
  for(int l=0; l<3; ++l){
    for(int k=0; k<3; ++k){
      for(int j=0; j<3; ++j){
        for(int i=0; i<3; ++i){
          for(long x=0; x<N; ++x){
            double s0 = 0;
            for(int m=0; m<3; ++m){
              double s1 = 0;
              for(int n=0; n<3; ++n){
                s1 += R0[j+3*n][x]*R1[i+3*m][x]*R2[m+3*n+9*k+27*l][x];
              }
              s0 += s1;
            }
            L[i+3*j+9*k+27*l][x] = s0;
          }
        }
      }
    }
  }
}
