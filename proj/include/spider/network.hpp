#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spider {

struct EdgeIndex {
    int value = 1;  // 1-based

    friend bool operator==(EdgeIndex a, EdgeIndex b) = default;
};

// Point (x, i) of the star graph; every (0, i) is the same junction point.
struct NetworkPoint {
    double x = 0.0;
    EdgeIndex i;

    friend bool operator==(const NetworkPoint& p, const NetworkPoint& q) {
        if (p.x == 0.0 && q.x == 0.0) return true;
        return p.x == q.x && p.i == q.i;
    }
};

double distance(const NetworkPoint& p, const NetworkPoint& q);

struct Bounds {
    double a_lower = 0.0;
    double sigma_lower = 0.0;
    double b_bound = 0.0;
    double sigma_bound = 0.0;
    double alpha_lip = 0.0;
};

struct ValidationReport;

using Field = std::function<double(double t, double x, double l)>;
using AlphaField = std::function<std::vector<double>(double t, double l)>;

struct CoefficientSet {
    int edges = 0;
    std::vector<Field> b;      // per edge
    std::vector<Field> sigma;  // per edge
    AlphaField alpha;
    Bounds bounds;
    std::shared_ptr<const ValidationReport> report;

    double drift(int edge, double t, double x, double l) const { return b[edge - 1](t, x, l); }
    double diffusion(int edge, double t, double x, double l) const { return sigma[edge - 1](t, x, l); }

    // Constant coefficients on every edge.
    static CoefficientSet constant(int edges, std::vector<double> b, std::vector<double> sigma,
                                   std::vector<double> alpha, Bounds bounds);
};

struct SamplingPlan {
    std::vector<double> t, x, l;

    static SamplingPlan uniform(double t_max, double x_max, double l_max, int points);
};

struct SamplePoint {
    int edge = 0;
    double t = 0.0, x = 0.0, l = 0.0;
};

struct ClauseResult {
    std::string name;  // "A", "E", "R-i", "R-ii", "R-iii"
    bool pass = true;
    double observed = 0.0;
    double bound = 0.0;
    SamplePoint worst;
};

struct ValidationReport {
    std::vector<ClauseResult> clauses;
    bool pass = true;

    const ClauseResult& clause(const std::string& name) const;
};

ValidationReport validate_coefficients(const CoefficientSet& c, const SamplingPlan& plan);

}  // namespace spider
