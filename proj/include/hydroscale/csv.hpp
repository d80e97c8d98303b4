#ifndef HYDROSCALE_CSV_HPP
#define HYDROSCALE_CSV_HPP

#include <cstdio>
#include <string>

namespace hydroscale
{

/// Round-trippable decimal form (17 significant digits).
inline std::string fmt17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace hydroscale

#endif  // HYDROSCALE_CSV_HPP
