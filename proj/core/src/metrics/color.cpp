#include "refinekit/metrics/color.hpp"

#include <cmath>
#include <numbers>

namespace refinekit::metrics {

namespace {

double linearize(std::uint8_t v)
{
    double c = v / 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t)
{
    constexpr double d = 6.0 / 29.0;
    return t > d * d * d ? std::cbrt(t) : t / (3 * d * d) + 4.0 / 29.0;
}

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
double rad(double deg) { return deg * std::numbers::pi / 180.0; }

} // namespace

Lab to_lab(css::Rgb c)
{
    const double r = linearize(c.r), g = linearize(c.g), b = linearize(c.b);
    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = lab_f(x / 0.95047), fy = lab_f(y / 1.0), fz = lab_f(z / 1.08883);
    return {116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)};
}

double ciede2000(const Lab& x, const Lab& y)
{
    const double c1 = std::hypot(x.a, x.b), c2 = std::hypot(y.a, y.b);
    const double c_bar = (c1 + c2) / 2;
    const double c_bar7 = std::pow(c_bar, 7);
    const double g = 0.5 * (1 - std::sqrt(c_bar7 / (c_bar7 + std::pow(25.0, 7))));
    const double a1 = (1 + g) * x.a, a2 = (1 + g) * y.a;
    const double c1p = std::hypot(a1, x.b), c2p = std::hypot(a2, y.b);
    auto hue = [](double b, double a) {
        if (a == 0 && b == 0)
            return 0.0;
        double h = deg(std::atan2(b, a));
        return h < 0 ? h + 360 : h;
    };
    const double h1 = hue(x.b, a1), h2 = hue(y.b, a2);

    const double dl = y.l - x.l;
    const double dc = c2p - c1p;
    double dh = 0;
    if (c1p * c2p != 0) {
        dh = h2 - h1;
        if (dh > 180)
            dh -= 360;
        else if (dh < -180)
            dh += 360;
    }
    const double dH = 2 * std::sqrt(c1p * c2p) * std::sin(rad(dh / 2));

    const double l_bar = (x.l + y.l) / 2;
    const double cp_bar = (c1p + c2p) / 2;
    double h_bar = h1 + h2;
    if (c1p * c2p != 0) {
        if (std::abs(h1 - h2) <= 180)
            h_bar = (h1 + h2) / 2;
        else if (h1 + h2 < 360)
            h_bar = (h1 + h2 + 360) / 2;
        else
            h_bar = (h1 + h2 - 360) / 2;
    }
    const double t = 1 - 0.17 * std::cos(rad(h_bar - 30)) + 0.24 * std::cos(rad(2 * h_bar)) +
                     0.32 * std::cos(rad(3 * h_bar + 6)) - 0.20 * std::cos(rad(4 * h_bar - 63));
    const double d_theta = 30 * std::exp(-std::pow((h_bar - 275) / 25, 2));
    const double cp_bar7 = std::pow(cp_bar, 7);
    const double rc = 2 * std::sqrt(cp_bar7 / (cp_bar7 + std::pow(25.0, 7)));
    const double l50 = (l_bar - 50) * (l_bar - 50);
    const double sl = 1 + 0.015 * l50 / std::sqrt(20 + l50);
    const double sc = 1 + 0.045 * cp_bar;
    const double sh = 1 + 0.015 * cp_bar * t;
    const double rt = -std::sin(rad(2 * d_theta)) * rc;

    const double tl = dl / sl, tc = dc / sc, th = dH / sh;
    return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

} // namespace refinekit::metrics
