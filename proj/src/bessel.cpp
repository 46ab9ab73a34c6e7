// bessel.cpp: spherical Bessel arrays
#include "nelson/bessel.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include <cmath>

namespace nelson {

void spherical_bessel(int L, double x, double* out) {
  if (x == 0) {
    out[0] = 1;
    for (int l = 1; l <= L; ++l) out[l] = 0;
    return;
  }
  if (x > L + 1) {
    const double s = std::sin(x), c = std::cos(x);
    out[0] = s / x;
    if (L >= 1) out[1] = s / (x * x) - c / x;
    for (int l = 1; l < L; ++l) out[l + 1] = (2 * l + 1) / x * out[l] - out[l - 1];
    return;
  }
  static const auto handler = gsl_set_error_handler_off();  // report through return codes
  (void)handler;
  if (gsl_sf_bessel_jl_steed_array(L, x, out) != GSL_SUCCESS)
    for (int l = 0; l <= L; ++l) out[l] = gsl_sf_bessel_jl(l, x);
}

}  // namespace nelson
