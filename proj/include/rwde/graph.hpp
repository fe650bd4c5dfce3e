#pragma once

#include "rwde/error.hpp"
#include "rwde/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rwde {

struct Edge {
    int tail = 0;
    int head = 0;
    double weight = 0.0;
};

/// Finite weighted digraph on integer labels. Edges are stored sorted by (tail, head) with
/// parallel edges merged by summing weights. Immutable after construction.
class WeightedDigraph {
public:
    WeightedDigraph() = default;

    /// `vertices` may contain labels that carry no edges; every edge endpoint is added as a vertex.
    WeightedDigraph(std::vector<int> vertices, const std::vector<Edge>& edges) {
        std::map<std::pair<int, int>, double> merged;
        for (const Edge& e : edges) {
            if (!(e.weight > 0.0) || !std::isfinite(e.weight))
                throw Error(ErrorCode::NonpositiveWeight,
                            "edge " + std::to_string(e.tail) + "->" + std::to_string(e.head));
            merged[{e.tail, e.head}] += e.weight;
            vertices.push_back(e.tail);
            vertices.push_back(e.head);
        }
        std::sort(vertices.begin(), vertices.end());
        vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
        vertices_ = std::move(vertices);
        if (!vertices_.empty()) {
            base_ = vertices_.front();
            contiguous_ = (vertices_.back() - vertices_.front() + 1) == static_cast<int>(vertices_.size());
        }
        edges_.reserve(merged.size());
        for (const auto& [key, w] : merged) edges_.push_back({key.first, key.second, w});

        const std::size_t n = vertices_.size();
        out_offsets_.assign(n + 1, 0);
        for (const Edge& e : edges_) ++out_offsets_[index_of(e.tail) + 1];
        for (std::size_t i = 0; i < n; ++i) out_offsets_[i + 1] += out_offsets_[i];

        in_offsets_.assign(n + 1, 0);
        for (const Edge& e : edges_) ++in_offsets_[index_of(e.head) + 1];
        for (std::size_t i = 0; i < n; ++i) in_offsets_[i + 1] += in_offsets_[i];
        in_edges_.resize(edges_.size());
        std::vector<std::size_t> fill(in_offsets_.begin(), in_offsets_.end() - 1);
        for (std::size_t k = 0; k < edges_.size(); ++k) in_edges_[fill[index_of(edges_[k].head)]++] = k;
    }

    const std::vector<int>& vertices() const noexcept { return vertices_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    bool contains(int v) const noexcept {
        if (contiguous_) return !vertices_.empty() && v >= base_ && v <= vertices_.back();
        return std::binary_search(vertices_.begin(), vertices_.end(), v);
    }

    std::size_t index_of(int v) const {
        if (contiguous_ && !vertices_.empty() && v >= base_ && v <= vertices_.back())
            return static_cast<std::size_t>(v - base_);
        auto it = std::lower_bound(vertices_.begin(), vertices_.end(), v);
        if (it == vertices_.end() || *it != v) throw Error(ErrorCode::UnknownVertex, std::to_string(v));
        return static_cast<std::size_t>(it - vertices_.begin());
    }

    /// Edge index range [first, last) of out-edges of the vertex with index `vi`.
    std::pair<std::size_t, std::size_t> out_range(std::size_t vi) const {
        return {out_offsets_[vi], out_offsets_[vi + 1]};
    }

    std::span<const Edge> out_edges(int v) const {
        auto [a, b] = out_range(index_of(v));
        return {edges_.data() + a, b - a};
    }

    /// Indices into edges() of the in-edges of `v`.
    std::span<const std::size_t> in_edge_indices(int v) const {
        std::size_t vi = index_of(v);
        return {in_edges_.data() + in_offsets_[vi], in_offsets_[vi + 1] - in_offsets_[vi]};
    }

    double out_weight(int v) const {
        double s = 0.0;
        for (const Edge& e : out_edges(v)) s += e.weight;
        return s;
    }

    double in_weight(int v) const {
        double s = 0.0;
        for (std::size_t k : in_edge_indices(v)) s += edges_[k].weight;
        return s;
    }

    /// Weight of edge tail->head, 0 when absent.
    double weight(int tail, int head) const {
        if (!contains(tail)) return 0.0;
        for (const Edge& e : out_edges(tail))
            if (e.head == head) return e.weight;
        return 0.0;
    }

    /// Same vertices, every edge reversed with its weight kept.
    WeightedDigraph reversed() const {
        std::vector<Edge> rev;
        rev.reserve(edges_.size());
        for (const Edge& e : edges_) rev.push_back({e.head, e.tail, e.weight});
        return WeightedDigraph(vertices_, rev);
    }

    WeightedDigraph shifted(int k) const {
        std::vector<int> vs;
        for (int v : vertices_) vs.push_back(v + k);
        std::vector<Edge> es;
        for (const Edge& e : edges_) es.push_back({e.tail + k, e.head + k, e.weight});
        return WeightedDigraph(vs, es);
    }

    /// Debug dump: `tail head weight` per line, sorted by (tail, head).
    void dump(std::ostream& os) const {
        char buf[64];
        for (const Edge& e : edges_) {
            std::snprintf(buf, sizeof buf, "%.12g", e.weight);
            os << e.tail << ' ' << e.head << ' ' << buf << '\n';
        }
    }

private:
    std::vector<int> vertices_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> out_offsets_;
    std::vector<std::size_t> in_offsets_;
    std::vector<std::size_t> in_edges_;
    int base_ = 0;
    bool contiguous_ = false;
};

struct DivergenceReport {
    std::map<int, double> divergence; ///< incoming minus outgoing weight
    double max_abs = 0.0;
};

inline DivergenceReport divergence_report(const WeightedDigraph& g) {
    DivergenceReport r;
    for (int v : g.vertices()) r.divergence[v] = 0.0;
    for (const Edge& e : g.edges()) {
        r.divergence[e.head] += e.weight;
        r.divergence[e.tail] -= e.weight;
    }
    for (const auto& [v, d] : r.divergence) r.max_abs = std::max(r.max_abs, std::abs(d));
    return r;
}

/// Induced subgraph of the model graph on [a, b].
inline WeightedDigraph build_window(const DirichletParams& p, int a, int b) {
    if (a > b) std::swap(a, b);
    std::vector<int> vs;
    for (int x = a; x <= b; ++x) vs.push_back(x);
    std::vector<Edge> es;
    const auto support = p.support();
    for (int x = a; x <= b; ++x)
        for (int i : support)
            if (x + i >= a && x + i <= b) es.push_back({x, x + i, p.alpha(i)});
    return WeightedDigraph(vs, es);
}

namespace detail {

/// Interior edges of vertices in [lo, hi] with heads clamped into [left, right].
inline void add_clamped_interior(const DirichletParams& p, int lo, int hi, int left, int right,
                                 std::vector<Edge>& es) {
    const auto support = p.support();
    for (int x = lo; x <= hi; ++x)
        for (int i : support) es.push_back({x, std::clamp(x + i, left, right), p.alpha(i)});
}

/// Compensation edges from the left endpoint `left` to left+j, j in [1, R], weight sum_{i>=j} alpha_i.
inline void add_left_compensation(const DirichletParams& p, int left, std::vector<Edge>& es) {
    for (int j = 1; j <= p.R(); ++j) {
        double w = 0.0;
        for (int i = j; i <= p.R(); ++i) w += p.alpha(i);
        if (w > 0.0) es.push_back({left, left + j, w});
    }
}

/// Compensation edges from the right endpoint to right-k, k in [1, L], weight sum_{t>=k} alpha_{-t}.
inline void add_right_compensation(const DirichletParams& p, int right, std::vector<Edge>& es) {
    for (int k = 1; k <= p.L(); ++k) {
        double w = 0.0;
        for (int t = k; t <= p.L(); ++t) w += p.alpha(-t);
        if (w > 0.0) es.push_back({right, right - k, w});
    }
}

} // namespace detail

/// Finite zero-divergence graph on [0, M] used for kappa1 > 0, closed by an M->0 edge of weight kappa1.
inline WeightedDigraph build_GM(const DirichletParams& p, int M) {
    if (M <= p.L() + p.R()) throw Error(ErrorCode::MTooSmall, "need M > L + R");
    const DerivedParams d = derive_params(p);
    if (!(d.kappa1 > 0.0) || kappa1_is_zero(d)) throw Error(ErrorCode::NonpositiveKappa1, "G_M needs kappa1 > 0");
    std::vector<int> vs;
    for (int x = 0; x <= M; ++x) vs.push_back(x);
    std::vector<Edge> es;
    detail::add_clamped_interior(p, 1, M - 1, 0, M, es);
    detail::add_left_compensation(p, 0, es);
    detail::add_right_compensation(p, M, es);
    es.push_back({M, 0, d.kappa1});
    return WeightedDigraph(vs, es);
}

/// Finite zero-divergence graph on [-M, M] used for kappa1 = 0, with unit edges 0 <-> -M.
inline WeightedDigraph build_HM(const DirichletParams& p, int M) {
    if (M <= p.L() + p.R()) throw Error(ErrorCode::MTooSmall, "need M > L + R");
    const DerivedParams d = derive_params(p);
    if (!kappa1_is_zero(d)) throw Error(ErrorCode::NonzeroKappa1, "H_M needs kappa1 = 0");
    std::vector<int> vs;
    for (int x = -M; x <= M; ++x) vs.push_back(x);
    std::vector<Edge> es;
    detail::add_clamped_interior(p, -M + 1, M - 1, -M, M, es);
    detail::add_left_compensation(p, -M, es);
    detail::add_right_compensation(p, M, es);
    es.push_back({0, -M, 1.0});
    es.push_back({-M, 0, 1.0});
    return WeightedDigraph(vs, es);
}

/// Half-line graph on [0, W]: model edges among [1, W] with heads below 1 sent to 0 and heads
/// above W sent to W, plus compensation edges out of 0.
inline WeightedDigraph build_Gplus(const DirichletParams& p, int W) {
    if (W <= p.L() + p.R()) throw Error(ErrorCode::WTooSmall, "need W > L + R");
    std::vector<int> vs;
    for (int x = 0; x <= W; ++x) vs.push_back(x);
    std::vector<Edge> es;
    detail::add_clamped_interior(p, 1, W, 0, W, es);
    detail::add_left_compensation(p, 0, es);
    return WeightedDigraph(vs, es);
}

/// Tarjan SCC over the subgraph induced by `member` (indexed by vertex index). Returns a
/// component id per vertex index (-1 for non-members) and the component count.
inline std::pair<std::vector<int>, int> scc_components(const WeightedDigraph& g, const std::vector<char>& member) {
    const std::size_t n = g.vertex_count();
    std::vector<int> comp(n, -1), low(n, 0), num(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<std::size_t> stack;
    int counter = 0;
    int ncomp = 0;
    // iterative DFS: frames of (vertex index, next out-edge position)
    std::vector<std::pair<std::size_t, std::size_t>> frames;
    for (std::size_t root = 0; root < n; ++root) {
        if (!member[root] || num[root] != -1) continue;
        frames.push_back({root, g.out_range(root).first});
        num[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            auto& [v, pos] = frames.back();
            const std::size_t end = g.out_range(v).second;
            bool descended = false;
            while (pos < end) {
                const std::size_t w = g.index_of(g.edges()[pos].head);
                ++pos;
                if (!member[w]) continue;
                if (num[w] == -1) {
                    num[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    frames.push_back({w, g.out_range(w).first});
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[v] = std::min(low[v], num[w]);
            }
            if (descended) continue;
            const std::size_t done = v;
            frames.pop_back();
            if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
            if (low[done] == num[done]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp[w] = ncomp;
                } while (w != done);
                ++ncomp;
            }
        }
    }
    return {comp, ncomp};
}

/// Strong connectivity of the subgraph induced by S. A singleton counts only with a self-loop.
inline bool strongly_connected(const WeightedDigraph& g, const std::vector<int>& S) {
    if (S.empty()) return false;
    std::vector<char> member(g.vertex_count(), 0);
    std::size_t distinct = 0;
    for (int v : S) {
        std::size_t vi = g.index_of(v);
        if (!member[vi]) ++distinct;
        member[vi] = 1;
    }
    if (distinct == 1) return g.weight(S.front(), S.front()) > 0.0;
    auto [comp, ncomp] = scc_components(g, member);
    int first = comp[g.index_of(S.front())];
    for (int v : S)
        if (comp[g.index_of(v)] != first) return false;
    return true;
}

} // namespace rwde
