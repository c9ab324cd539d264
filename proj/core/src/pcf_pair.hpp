#pragma once

namespace bcm::detail {

struct PcfPair {
  double value;  // D_v(z)
  double lower;  // D_{v-1}(z)
};

// D_v(z) and D_{v-1}(z) together; the continued-fraction route yields both at
// the cost of one. Unchecked, same accuracy range as pcf_d_raw.
PcfPair pcf_pair(double v, double z);

}  // namespace bcm::detail
