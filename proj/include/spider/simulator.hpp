#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spider/network.hpp"
#include "spider/philox.hpp"
#include "spider/stats.hpp"

namespace spider {

enum class VertexPolicy { reflection, shell };

const char* policy_name(VertexPolicy p);

struct SimConfig {
    double h = 1e-4;
    double T = 1.0;
    double shell_radius = 0.01;
    VertexPolicy policy = VertexPolicy::reflection;
    std::size_t n_paths = 1000;
    std::uint64_t seed = 1;
    bool store_paths = false;
    bool store_noise = false;
    int workers = 0;  // 0: OpenMP default

    // Steps from t0 to T; throws if T - t0 is not a multiple of h.
    std::size_t steps_from(double t0) const;
};

// Hex FNV-1a of the result-determining fields (worker count and storage flags excluded).
std::string config_hash(const SimConfig& cfg);

// Throws ConfigError for a bad step size, horizon or shell radius.
void check_config(const SimConfig& cfg, const CoefficientSet& c);

struct SpiderState {
    double t = 0.0;
    double x = 0.0;
    EdgeIndex i;
    double l = 0.0;
    bool in_shell = false;  // inside a Shell-policy excursion from the vertex
};

struct StepOutcome {
    SpiderState pre;    // state before the step
    SpiderState state;  // t advanced by h; x = proposal when no contact
    double proposal = 0.0;
    bool contact = false;
};

StepOutcome step_interior(const SpiderState& s, const CoefficientSet& c, double h, double gaussian);

// Edge drawn from alpha(t, l) by inverse CDF of `uniform`.
EdgeIndex sample_edge(const CoefficientSet& c, double t, double l, double uniform);

// Reflection-policy draw: weights alpha_j / sigma_j(t, 0, l), renormalized. Equal to
// sample_edge when sigma at the vertex is the same on every edge.
EdgeIndex sample_edge_reflection(const CoefficientSet& c, double t, double l, double uniform);

// Resolves a contact outcome from edge i. Reflection: (t+h, x', j, l + x' - y) with
// x' = -y sigma_j / sigma_i (sigmas at the vertex). Shell: (t+h, 0, j, l - y) with the
// shell excursion flag set; subsequent steps follow the projected radial scheme on
// edge j until x >= shell_radius.
SpiderState resolve_vertex(const StepOutcome& out, const CoefficientSet& c, VertexPolicy policy, double uniform);

struct Step {
    SpiderState state;
    double dl = 0.0;
    double gaussian = 0.0;
    bool contact = false;
};

// One path of the scheme, advanced one grid step at a time.
class Stepper {
public:
    Stepper(const CoefficientSet& c, const SimConfig& cfg, const SpiderState& init, std::uint64_t path_index);
    // Drive with supplied standard normals instead of the path stream (edge draws still use it).
    Stepper(const CoefficientSet& c, const SimConfig& cfg, const SpiderState& init, std::uint64_t path_index,
            std::span<const double> gaussians);

    Step advance();
    const SpiderState& state() const { return s_; }
    std::size_t step_index() const { return k_; }

private:
    const CoefficientSet& c_;
    SimConfig cfg_;
    double t0_;
    double sqrt_h_;
    SpiderState s_;
    PathStream rng_;
    std::span<const double> fixed_;
    std::size_t k_ = 0;
};

struct SpiderPath {
    double t0 = 0.0;
    double h = 0.0;
    double shell_radius = 0.0;
    double sigma_bound = 1.0;
    VertexPolicy policy = VertexPolicy::reflection;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;

    std::vector<double> x, l;
    std::vector<int> edge;
    std::vector<std::uint8_t> contact;  // contact[k]: vertex touched on the step into k
    std::vector<double> noise;          // noise[k]: normal used on step k -> k+1 (optional)

    std::size_t steps() const { return x.empty() ? 0 : x.size() - 1; }
    double t(std::size_t k) const { return t0 + static_cast<double>(k) * h; }
    double delta_activity() const;
};

SpiderPath simulate_path(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg,
                         std::uint64_t path_index);
SpiderPath simulate_path(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg,
                         std::uint64_t path_index, std::span<const double> gaussians);

struct BatchSummary {
    std::size_t n = 0;
    RunningStats x_T, l_T;
    std::vector<std::size_t> edge_T;  // final-edge counts (x > 0 only)
    std::size_t at_vertex_T = 0;
};

struct PathEnsemble {
    std::vector<SpiderPath> paths;  // filled when store_paths
    std::vector<double> x_T, l_T;
    std::vector<int> edge_T;
    BatchSummary summary;
};

PathEnsemble simulate_batch(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg);
PathEnsemble simulate_batch_serial(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg);

struct HitResult {
    double theta = 0.0;  // absolute time
    EdgeIndex edge;
    double l = 0.0;
    bool censored = false;
};

HitResult first_hit(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg, double level,
                    std::uint64_t path_index);

}  // namespace spider
