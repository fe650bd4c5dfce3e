#pragma once

#include "rwde/error.hpp"
#include "rwde/graph.hpp"
#include "rwde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

namespace rwde {

/// log of a Gamma(shape, 1) variate. Marsaglia-Tsang for shape >= 1; for shape < 1 the boost
/// G(a) = G(a + 1) U^(1/a) is applied in log space so tiny shapes never underflow.
inline double sample_log_gamma(double shape, RngStream& rng) {
    if (!(shape > 0.0) || !std::isfinite(shape))
        throw Error(ErrorCode::NonpositiveConcentration, "gamma shape must be positive");
    double boost = 0.0;
    if (shape < 1.0) {
        boost = std::log(rng.uniform()) / shape;
        shape += 1.0;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2 || std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v)))
            return std::log(d) + std::log(v) + boost;
    }
}

namespace detail {

/// Normalises log-gamma draws onto the simplex; entries are floored at the smallest normal double.
inline void normalise_log_weights(std::vector<double>& logs) {
    const double top = *std::max_element(logs.begin(), logs.end());
    double total = 0.0;
    for (double& l : logs) {
        l = std::exp(l - top);
        total += l;
    }
    for (double& l : logs) l = std::max(l / total, std::numeric_limits<double>::min());
}

} // namespace detail

inline std::vector<double> sample_dirichlet(std::span<const double> concentrations, RngStream& rng) {
    if (concentrations.empty()) throw Error(ErrorCode::NonpositiveConcentration, "empty concentration list");
    for (double a : concentrations)
        if (!(a > 0.0)) throw Error(ErrorCode::NonpositiveConcentration, "concentrations must be positive");
    if (concentrations.size() == 1) return {1.0};
    std::vector<double> logs;
    logs.reserve(concentrations.size());
    for (double a : concentrations) logs.push_back(sample_log_gamma(a, rng));
    detail::normalise_log_weights(logs);
    return logs;
}

/// Transition probabilities on a finite graph, one entry per graph edge (same order as edges()).
class Environment {
public:
    Environment(std::shared_ptr<const WeightedDigraph> graph, std::vector<double> probs)
        : graph_(std::move(graph)), probs_(std::move(probs)) {
        if (!graph_) throw Error(ErrorCode::BadRow, "null graph");
        if (probs_.size() != graph_->edge_count()) throw Error(ErrorCode::BadRow, "one probability per edge expected");
        for (std::size_t vi = 0; vi < graph_->vertex_count(); ++vi) {
            auto [a, b] = graph_->out_range(vi);
            if (a == b) continue;
            double s = 0.0;
            for (std::size_t k = a; k < b; ++k) {
                if (!(probs_[k] > 0.0) || probs_[k] > 1.0)
                    throw Error(ErrorCode::BadRow, "probability outside (0, 1] at vertex " +
                                                       std::to_string(graph_->vertices()[vi]));
                s += probs_[k];
            }
            if (std::abs(s - 1.0) > 1e-12)
                throw Error(ErrorCode::BadRow, "row of vertex " + std::to_string(graph_->vertices()[vi]) +
                                                   " does not sum to 1");
        }
    }

    const WeightedDigraph& graph() const noexcept { return *graph_; }
    const std::shared_ptr<const WeightedDigraph>& graph_ptr() const noexcept { return graph_; }
    std::span<const double> probabilities() const noexcept { return probs_; }

    double prob_of_edge(std::size_t edge_index) const { return probs_[edge_index]; }

    /// omega(x, y), 0 when there is no edge.
    double prob(int x, int y) const {
        if (!graph_->contains(x)) return 0.0;
        auto [a, b] = graph_->out_range(graph_->index_of(x));
        for (std::size_t k = a; k < b; ++k)
            if (graph_->edges()[k].head == y) return probs_[k];
        return 0.0;
    }

    /// Environment dump: `x head prob` per line, sorted.
    void dump(std::ostream& os) const {
        char buf[64];
        for (std::size_t k = 0; k < probs_.size(); ++k) {
            const Edge& e = graph_->edges()[k];
            std::snprintf(buf, sizeof buf, "%.12g", probs_[k]);
            os << e.tail << ' ' << e.head << ' ' << buf << '\n';
        }
    }

private:
    std::shared_ptr<const WeightedDigraph> graph_;
    std::vector<double> probs_;
};

/// Row of vertex v is drawn from the stream rng.split(v), so a vertex's row depends only on
/// (seed, stream, v, its out-weights) and not on the rest of the graph.
inline Environment sample_environment(std::shared_ptr<const WeightedDigraph> g, const RngStream& rng) {
    std::vector<double> probs(g->edge_count());
    std::vector<double> weights;
    for (std::size_t vi = 0; vi < g->vertex_count(); ++vi) {
        auto [a, b] = g->out_range(vi);
        const int v = g->vertices()[vi];
        if (a == b) throw Error(ErrorCode::IsolatedVertex, "vertex " + std::to_string(v) + " has no out-edge");
        weights.clear();
        for (std::size_t k = a; k < b; ++k) weights.push_back(g->edges()[k].weight);
        RngStream row_rng = rng.split(static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
        const auto row = sample_dirichlet(weights, row_rng);
        std::copy(row.begin(), row.end(), probs.begin() + static_cast<std::ptrdiff_t>(a));
    }
    return Environment(std::move(g), std::move(probs));
}

inline Environment sample_environment(const WeightedDigraph& g, const RngStream& rng) {
    return sample_environment(std::make_shared<const WeightedDigraph>(g), rng);
}

/// Block sums of a probability vector; blocks must partition the index set.
inline std::vector<double> amalgamate(std::span<const double> v, const std::vector<std::vector<std::size_t>>& partition) {
    std::vector<char> seen(v.size(), 0);
    std::vector<double> out;
    out.reserve(partition.size());
    for (const auto& block : partition) {
        if (block.empty()) throw Error(ErrorCode::BadPartition, "empty block");
        double s = 0.0;
        for (std::size_t i : block) {
            if (i >= v.size() || seen[i]) throw Error(ErrorCode::BadPartition, "index repeated or out of range");
            seen[i] = 1;
            s += v[i];
        }
        out.push_back(s);
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw Error(ErrorCode::BadPartition, "partition does not cover every index");
    return out;
}

} // namespace rwde
