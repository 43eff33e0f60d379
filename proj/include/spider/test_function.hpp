#pragma once

#include <string>
#include <vector>

namespace spider {

// Smooth factor in t: 1, exp(rate t), sin(rate t) or cos(rate t).
struct TimeFactor {
    enum class Kind { one, exp, sin, cos };
    Kind kind = Kind::one;
    double rate = 0.0;

    double value(double t) const;
    double deriv(double t) const;
};

// coeff[i] * x^x_pow * l^l_pow * tau(t) on edge i+1
struct Term {
    std::vector<double> coeff;
    int x_pow = 0;
    int l_pow = 0;
    TimeFactor tau;
};

struct Jet {
    double f = 0.0, ft = 0.0, fx = 0.0, fxx = 0.0, fl = 0.0;
};

// Test function on the star graph: a finite sum of Terms, continuous at the vertex.
class TestFunction {
public:
    TestFunction(int edges, std::vector<Term> terms, std::string name = {});

    static TestFunction constant(int edges, double c);
    static TestFunction identity(int edges);

    int edges() const { return edges_; }
    const std::string& name() const { return name_; }
    const std::vector<Term>& terms() const { return terms_; }

    Jet jet(int edge, double t, double x, double l) const;
    double value(int edge, double t, double x, double l) const;
    double dt(int edge, double t, double x, double l) const { return jet(edge, t, x, l).ft; }
    double dx(int edge, double t, double x, double l) const { return jet(edge, t, x, l).fx; }
    double dxx(int edge, double t, double x, double l) const { return jet(edge, t, x, l).fxx; }
    double dl(int edge, double t, double x, double l) const { return jet(edge, t, x, l).fl; }

    // Value at the junction (edge independent).
    double vertex_value(double t, double l) const { return value(1, t, 0.0, l); }

private:
    int edges_;
    std::vector<Term> terms_;
    std::string name_;
};

}  // namespace spider
