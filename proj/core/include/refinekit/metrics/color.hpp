#pragma once

#include "refinekit/doc/css.hpp"

namespace refinekit::metrics {

struct Lab {
    double l = 0, a = 0, b = 0;
};

// sRGB (D65) to CIELAB.
Lab to_lab(css::Rgb c);

// CIEDE2000 with kL = kC = kH = 1.
double ciede2000(const Lab& x, const Lab& y);

} // namespace refinekit::metrics
