// bessel.hpp: spherical Bessel arrays
#pragma once

namespace nelson {

// j_0..j_L at x ≥ 0 into out[0..L]. Upward recurrence where it is stable
// (x > L), GSL's Steed continued fraction otherwise.
void spherical_bessel(int L, double x, double* out);

}  // namespace nelson
