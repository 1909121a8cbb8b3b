void tl_0009(const long N, double* const* L, const double* const* R0, const double* const* R1, const double* const* R2, const double* const* R3)
{
  for(int l=0; l<3; ++l){
    for(int k=0; k<3; ++k){
      for(int j=0; j<3; ++j){
        for(int i=0; i<3; ++i){
          for(long x=0; x<N; ++x){
            L[i+3*j+9*k+27*l][x] = R0[i][x]*R1[j][x]*R2[k][x]*R3[l][x];
          }
        }
      }
    }
  }
}
