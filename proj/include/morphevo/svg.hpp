#pragma once

#include <string>
#include <vector>

namespace morphevo::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> std;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

struct BoxGroup {
    std::string label;
    std::vector<double> values;
};

struct BoxChart {
    std::string title;
    std::string y_label;
    std::vector<BoxGroup> groups;
};

struct BoxStats {
    double q1, median, q3;
    double whisker_lo, whisker_hi;
    std::vector<double> outliers;
};

/// Quartiles by linear interpolation; whiskers at the furthest points within 1.5 IQR.
BoxStats box_stats(std::vector<double> values);

/// Mean line with a shaded +-1 std band per series.
std::string render(const LineChart& chart);
std::string render(const BoxChart& chart);

} // namespace morphevo::svg
