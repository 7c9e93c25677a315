#include "morphevo/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace morphevo::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00")
        s = "0.00";
    return s;
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string tick_label(double v)
{
    char buf[32];
    if (std::abs(v) >= 1e4 || (std::abs(v) < 1e-3 && v != 0.0))
        std::snprintf(buf, sizeof buf, "%.3g", v);
    else
        std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v)
    {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }

    void finish()
    {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            const double pad = std::max(1e-3, std::abs(lo) * 0.1);
            lo -= pad;
            hi += pad;
        }
    }
};

// "Nice" tick step covering the range in roughly five intervals.
double tick_step(const Range& r)
{
    const double raw = (r.hi - r.lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return (f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0) * mag;
}

class Canvas {
public:
    Canvas(const std::string& title)
    {
        out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
                "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\">\n";
        out_ += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
        text(kWidth / 2.0, 22.0, title, "middle", 15);
    }

    void text(double x, double y, const std::string& s, const char* anchor, int size, const char* extra = "")
    {
        out_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\" font-size=\"" +
                std::to_string(size) + "\"" + extra + ">" + escape(s) + "</text>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1.0)
    {
        out_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
                "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"/>\n";
    }

    void raw(const std::string& s) { out_ += s; }

    std::string finish()
    {
        out_ += "</svg>\n";
        return std::move(out_);
    }

private:
    std::string out_;
};

struct Frame {
    Range xr;
    Range yr;

    double px(double x) const { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - yr.lo) / (yr.hi - yr.lo) * (kHeight - kTop - kBottom); }
};

void y_axis(Canvas& c, const Frame& f, const std::string& label)
{
    const double step = tick_step(f.yr);
    for (double t = std::ceil(f.yr.lo / step) * step; t <= f.yr.hi + 1e-9 * step; t += step) {
        const double y = f.py(t);
        c.line(kLeft, y, kWidth - kRight, y, "#e0e0e0");
        c.text(kLeft - 6.0, y + 4.0, tick_label(std::abs(t) < 1e-12 * step ? 0.0 : t), "end", 11);
    }
    c.line(kLeft, kTop, kLeft, kHeight - kBottom, "black");
    const double mid = (kTop + kHeight - kBottom) / 2.0;
    c.text(18.0, mid, label, "middle", 12,
           (" transform=\"rotate(-90 18.00 " + num(mid) + ")\"").c_str());
}

} // namespace

BoxStats box_stats(std::vector<double> values)
{
    values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }),
                 values.end());
    if (values.empty())
        throw std::invalid_argument("box_stats: no finite values");
    std::sort(values.begin(), values.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto i = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(i);
        return i + 1 < values.size() ? values[i] + frac * (values[i + 1] - values[i]) : values[i];
    };
    BoxStats s;
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    s.whisker_lo = s.q1;
    s.whisker_hi = s.q3;
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            s.outliers.push_back(v);
            continue;
        }
        s.whisker_lo = std::min(s.whisker_lo, v);
        s.whisker_hi = std::max(s.whisker_hi, v);
    }
    return s;
}

std::string render(const LineChart& chart)
{
    Frame f;
    for (const auto& s : chart.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            f.xr.add(s.x[i]);
            f.yr.add(s.mean[i] - s.std[i]);
            f.yr.add(s.mean[i] + s.std[i]);
        }
    f.xr.finish();
    f.yr.finish();

    Canvas c(chart.title);
    y_axis(c, f, chart.y_label);
    const double xstep = tick_step(f.xr);
    for (double t = std::ceil(f.xr.lo / xstep) * xstep; t <= f.xr.hi + 1e-9 * xstep; t += xstep) {
        const double x = f.px(t);
        c.line(x, kHeight - kBottom, x, kHeight - kBottom + 5.0, "black");
        c.text(x, kHeight - kBottom + 18.0, tick_label(t), "middle", 11);
    }
    c.line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "black");
    c.text((kLeft + kWidth - kRight) / 2.0, kHeight - 12.0, chart.x_label, "middle", 12);

    for (std::size_t k = 0; k < chart.series.size(); ++k) {
        const auto& s = chart.series[k];
        const std::string colour = kPalette[k % std::size(kPalette)];
        if (!s.x.empty()) {
            std::string band = "<polygon fill=\"" + colour + "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                band += num(f.px(s.x[i])) + "," + num(f.py(s.mean[i] + s.std[i])) + " ";
            for (std::size_t i = s.x.size(); i-- > 0;)
                band += num(f.px(s.x[i])) + "," + num(f.py(s.mean[i] - s.std[i])) + (i ? " " : "");
            c.raw(band + "\"/>\n");

            std::string path = "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"2.00\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                path += num(f.px(s.x[i])) + "," + num(f.py(s.mean[i])) + (i + 1 < s.x.size() ? " " : "");
            c.raw(path + "\"/>\n");
        }
        const double ly = kTop + 10.0 + 20.0 * static_cast<double>(k);
        c.line(kWidth - kRight + 12.0, ly, kWidth - kRight + 36.0, ly, colour, 3.0);
        c.text(kWidth - kRight + 42.0, ly + 4.0, s.label, "start", 12);
    }
    return c.finish();
}

std::string render(const BoxChart& chart)
{
    Frame f;
    std::vector<BoxStats> stats;
    for (const auto& g : chart.groups) {
        stats.push_back(box_stats(g.values));
        for (double v : g.values)
            f.yr.add(v);
    }
    f.xr = {0.0, static_cast<double>(std::max<std::size_t>(1, chart.groups.size()))};
    f.yr.finish();

    Canvas c(chart.title);
    y_axis(c, f, chart.y_label);
    c.line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "black");

    const double slot = (kWidth - kLeft - kRight) / f.xr.hi;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto& s = stats[i];
        const std::string colour = kPalette[i % std::size(kPalette)];
        const double cx = f.px(static_cast<double>(i) + 0.5);
        const double hw = 0.3 * slot;
        c.line(cx, f.py(s.whisker_lo), cx, f.py(s.q1), "black");
        c.line(cx, f.py(s.q3), cx, f.py(s.whisker_hi), "black");
        c.line(cx - hw / 2.0, f.py(s.whisker_lo), cx + hw / 2.0, f.py(s.whisker_lo), "black");
        c.line(cx - hw / 2.0, f.py(s.whisker_hi), cx + hw / 2.0, f.py(s.whisker_hi), "black");
        c.raw("<rect x=\"" + num(cx - hw) + "\" y=\"" + num(f.py(s.q3)) + "\" width=\"" + num(2.0 * hw) +
              "\" height=\"" + num(f.py(s.q1) - f.py(s.q3)) + "\" fill=\"" + colour +
              "\" fill-opacity=\"0.35\" stroke=\"black\"/>\n");
        c.line(cx - hw, f.py(s.median), cx + hw, f.py(s.median), "black", 2.0);
        for (double o : s.outliers)
            c.raw("<circle cx=\"" + num(cx) + "\" cy=\"" + num(f.py(o)) + "\" r=\"3.00\" fill=\"none\" stroke=\"black\"/>\n");
        c.text(cx, kHeight - kBottom + 18.0, chart.groups[i].label, "middle", 11);
    }
    return c.finish();
}

} // namespace morphevo::svg
