#include "anisopf/params.hpp"

#include <cmath>
#include <string>

namespace anisopf {

namespace {

void require(bool ok, const char* key, const char* reason) {
  if (!ok) throw Error(ErrorKind::ValidationError, std::string(key) + ": " + reason);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void PhysicalParams::validate() const {
  require(finite(theta) && theta >= 0.0, "theta", "must be >= 0");
  require(finite(lambda) && lambda > 0.0, "lambda", "must be > 0");
  require(finite(a) && a > 0.0, "a", "must be > 0");
  require(finite(alpha) && alpha > 0.0, "alpha", "must be > 0");
  require(finite(rho) && rho >= 0.0, "rho", "must be >= 0");
  require(finite(k_plus) && k_plus > 0.0, "Kplus", "must be > 0");
  require(finite(k_minus) && k_minus > 0.0, "Kminus", "must be > 0");
  require(finite(eps) && eps > 0.0, "eps", "must be > 0");
  require(finite(u_D), "u_D", "must be finite");
  require(finite(H) && H > 0.0, "H", "must be > 0");
  require(finite(R0) && R0 > 0.0 && R0 < H, "R0", "must lie in (0, H)");
  require(finite(T_end) && T_end > 0.0, "T_end", "must be > 0");
  require(finite(tau) && tau > 0.0, "tau", "must be > 0");
  require(dim == 2 || dim == 3, "dim", "must be 2 or 3");
}

}  // namespace anisopf
