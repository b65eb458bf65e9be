#include "faim/routes.hpp"

#include <algorithm>

namespace faim {

namespace {

void rescale_half_shift(DistanceMatrix& m) {
    for (double& v : m.values) v = (v + 1.0) / 2.0;
}

void rescale_half(DistanceMatrix& m) {
    for (double& v : m.values) v /= 2.0;
}

}  // namespace

double unit_route_value(double raw, ImMode mode) {
    if (mode == ImMode::Gnn) return (raw + 1.0) / 2.0;
    return raw;
}

RouteDistances to_unit_range(const RouteDistances& rd, bool rescale_direct) {
    RouteDistances out = rd;
    if (rd.mode == ImMode::Gnn) {
        rescale_half_shift(out.d_A);
        rescale_half_shift(out.d_B);
        rescale_half_shift(out.d_C);
        rescale_half_shift(out.d_o);
    }
    if (rescale_direct) rescale_half(out.d_direct);
    return out;
}

}  // namespace faim
