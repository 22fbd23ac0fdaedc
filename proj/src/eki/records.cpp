#include "reki/eki.hpp"

#include <cstdio>
#include <ostream>
#include <string>

namespace reki {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<IterationRecord>& records, bool with_jacobian) {
  out << "n,alpha,doublings,misfit,mean_output_misfit,rel_error,forward_evals,stopped";
  if (with_jacobian) out << ",jacobian_evals";
  out << '\n';
  for (const auto& r : records) {
    out << r.n << ',' << num(r.alpha) << ',' << r.doublings << ',' << num(r.misfit) << ',' << num(r.mean_output_misfit) << ','
        << num(r.rel_error) << ',' << r.forward_evals << ',' << (r.stopped ? 1 : 0);
    if (with_jacobian) out << ',' << r.jacobian_evals;
    out << '\n';
  }
}

}  // namespace reki
