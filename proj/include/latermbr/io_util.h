#pragma once

#include <cstdio>
#include <string>

namespace latermbr {

// Text form that round-trips a double bit-exactly through operator>>.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace latermbr
