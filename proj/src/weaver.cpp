#include "capsum/weaver.hpp"

#include "capsum/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

namespace capsum {

void WeaverParams::validate() const {
    if (!(sigma_coarse >= -1.0 && sigma_coarse <= 1.0)) throw ConfigError("sigma_coarse must lie in [-1, 1]");
    if (!(sigma_fine >= -1.0 && sigma_fine <= 1.0)) throw ConfigError("sigma_fine must lie in [-1, 1]");
    if (!(gap_max_sec > 0.0)) throw ConfigError("gap_max_sec must be positive");
    if (sigma_fine < sigma_coarse) throw ConfigError("sigma_fine must be >= sigma_coarse");
}

std::size_t ContextHierarchy::candidate_count() const {
    std::size_t n = 0;
    for (const auto& c : coarse) n += c.members.size();
    return n;
}

std::vector<CoarseContext> weave_coarse(std::span<const SpatioTemporalToken> tokens, double sigma_coarse,
                                        double gap_max_sec) {
    std::vector<CoarseContext> out;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        const auto& tok = tokens[k];
        bool cut = out.empty();
        if (!cut) {
            const auto& prev = tokens[k - 1];
            if (tok.timestamp_sec < prev.timestamp_sec) throw DataError("weave_coarse: tokens are not in time order");
            cut = (tok.timestamp_sec - prev.timestamp_sec > gap_max_sec) || token_affinity(prev, tok) < sigma_coarse;
        }
        if (cut) {
            CoarseContext c;
            c.id = static_cast<int>(out.size());
            c.t_start = tok.timestamp_sec;
            out.push_back(std::move(c));
        }
        out.back().members.push_back(tok.frame_index);
        out.back().t_end = tok.timestamp_sec;
    }
    return out;
}

namespace {

std::vector<double> unit(const std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    std::vector<double> out(v);
    if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (auto& x : out) x *= inv;
    }
    return out;
}

}  // namespace

std::vector<FineContext> weave_fine(const CoarseContext& coarse, std::span<const SpatioTemporalToken> tokens,
                                    double sigma_fine) {
    std::unordered_map<FrameIndex, const SpatioTemporalToken*> by_index;
    by_index.reserve(tokens.size());
    for (const auto& t : tokens) by_index.emplace(t.frame_index, &t);

    // Canonical order: ascending frame index. Slot k holds the k-th smallest member.
    std::vector<FrameIndex> members = coarse.members;
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    const std::size_t n = members.size();
    if (n == 0) return {};

    std::vector<std::vector<double>> units;
    units.reserve(n);
    for (FrameIndex idx : members) {
        auto it = by_index.find(idx);
        if (it == by_index.end()) throw DataError("weave_fine: no token for frame " + std::to_string(idx));
        units.push_back(unit(it->second->vector));
    }

    // sum[a][b]: total pairwise affinity between clusters a and b (by representative slot).
    std::vector<double> sum(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double dot = 0.0;
            const auto& ua = units[a];
            const auto& ub = units[b];
            for (std::size_t i = 0; i < ua.size(); ++i) dot += ua[i] * ub[i];
            sum[a * n + b] = dot;
            sum[b * n + a] = dot;
        }
    }
    units.clear();

    std::vector<std::size_t> size(n, 1);
    std::vector<bool> active(n, true);
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});

    // A cluster is identified by its smallest slot, which is also its smallest member.
    auto avg = [&](std::size_t a, std::size_t b) {
        return sum[a * n + b] / static_cast<double>(size[a] * size[b]);
    };
    // Strict "better" ordering on candidate pairs: higher affinity, then smaller keys.
    auto better = [](double v1, std::size_t a1, std::size_t b1, double v2, std::size_t a2, std::size_t b2) {
        if (v1 != v2) return v1 > v2;
        const auto p1 = std::minmax(a1, b1);
        const auto p2 = std::minmax(a2, b2);
        return p1 < p2;
    };

    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> best(n, kNone);
    std::vector<double> best_val(n, -std::numeric_limits<double>::infinity());
    auto recompute = [&](std::size_t x) {
        best[x] = kNone;
        best_val[x] = -std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < n; ++y) {
            if (y == x || !active[y]) continue;
            const double v = avg(x, y);
            if (best[x] == kNone || better(v, x, y, best_val[x], x, best[x])) {
                best[x] = y;
                best_val[x] = v;
            }
        }
    };
    for (std::size_t x = 0; x < n; ++x) recompute(x);

    for (std::size_t remaining = n; remaining > 1; --remaining) {
        std::size_t ga = kNone;
        for (std::size_t x = 0; x < n; ++x) {
            if (!active[x] || best[x] == kNone) continue;
            if (ga == kNone || better(best_val[x], x, best[x], best_val[ga], ga, best[ga])) ga = x;
        }
        if (ga == kNone || best_val[ga] < sigma_fine) break;

        const std::size_t keep = std::min(ga, best[ga]);
        const std::size_t drop = std::max(ga, best[ga]);
        for (std::size_t y = 0; y < n; ++y) {
            if (!active[y] || y == keep || y == drop) continue;
            const double s = sum[keep * n + y] + sum[drop * n + y];
            sum[keep * n + y] = s;
            sum[y * n + keep] = s;
        }
        size[keep] += size[drop];
        active[drop] = false;
        parent[drop] = keep;

        for (std::size_t x = 0; x < n; ++x) {
            if (!active[x] || x == keep) continue;
            if (best[x] == keep || best[x] == drop) {
                recompute(x);
            } else {
                const double v = avg(x, keep);
                if (better(v, x, keep, best_val[x], x, best[x])) {
                    best[x] = keep;
                    best_val[x] = v;
                }
            }
        }
        recompute(keep);
    }

    auto root = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x];
        return x;
    };
    std::map<std::size_t, std::vector<FrameIndex>> groups;  // keyed by smallest slot -> time order
    for (std::size_t x = 0; x < n; ++x) groups[root(x)].push_back(members[x]);

    std::vector<FineContext> out;
    out.reserve(groups.size());
    for (auto& [_, m] : groups) {
        FineContext fc;
        fc.coarse_id = coarse.id;
        fc.fine_id = static_cast<int>(out.size());
        fc.members = std::move(m);
        out.push_back(std::move(fc));
    }
    return out;
}

ContextHierarchy HierarchicalWeaver::weave(std::span<const SpatioTemporalToken> tokens) const {
    ContextHierarchy h;
    h.method = "hierarchical";
    h.params = params_;
    h.coarse = weave_coarse(tokens, params_.sigma_coarse, params_.gap_max_sec);

    // Coarse contexts are contiguous runs, so each one's tokens are a contiguous slice.
    std::size_t offset = 0;
    for (const auto& c : h.coarse) {
        auto slice = tokens.subspan(offset, c.members.size());
        offset += c.members.size();
        auto fine = weave_fine(c, slice, params_.sigma_fine);
        for (auto& f : fine) h.fine.push_back(std::move(f));
    }
    return h;
}

FixedWindowWeaver::FixedWindowWeaver(double window_sec) : window_sec_(window_sec) {
    if (!(window_sec > 0.0)) throw ConfigError("ablation window must be positive");
}

ContextHierarchy FixedWindowWeaver::weave(std::span<const SpatioTemporalToken> tokens) const {
    ContextHierarchy h;
    h.method = "fixed_window";
    h.window_sec = window_sec_;
    long long current_bin = 0;
    for (const auto& tok : tokens) {
        const auto bin = static_cast<long long>(std::floor(tok.timestamp_sec / window_sec_));
        if (h.coarse.empty() || bin != current_bin) {
            if (!h.coarse.empty() && bin < current_bin) throw DataError("tokens are not in time order");
            current_bin = bin;
            CoarseContext c;
            c.id = static_cast<int>(h.coarse.size());
            c.t_start = tok.timestamp_sec;
            h.coarse.push_back(std::move(c));
            h.fine.push_back({static_cast<int>(h.fine.size()), 0, {}});
        }
        h.coarse.back().members.push_back(tok.frame_index);
        h.coarse.back().t_end = tok.timestamp_sec;
        h.fine.back().members.push_back(tok.frame_index);
    }
    return h;
}

LabelId dominant_label(const FineContext& context, const std::function<LabelId(FrameIndex)>& truth) {
    std::map<LabelId, std::size_t> counts;
    for (FrameIndex idx : context.members) ++counts[truth(idx)];
    LabelId best = 0;
    std::size_t best_count = 0;
    for (const auto& [label, count] : counts) {  // ascending label id, so strict > keeps the lowest on ties
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    }
    return best;
}

double context_purity(const FineContext& context, const std::function<LabelId(FrameIndex)>& truth) {
    if (context.members.empty()) return 0.0;
    const LabelId mode = dominant_label(context, truth);
    std::size_t hits = 0;
    for (FrameIndex idx : context.members) hits += truth(idx) == mode ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(context.members.size());
}

json hierarchy_to_json(const ContextHierarchy& h) {
    json coarse = json::array();
    for (const auto& c : h.coarse) {
        coarse.push_back({{"id", c.id}, {"members", c.members}, {"t_start", c.t_start}, {"t_end", c.t_end}});
    }
    json fine = json::array();
    for (const auto& f : h.fine) {
        fine.push_back({{"coarse_id", f.coarse_id}, {"fine_id", f.fine_id}, {"members", f.members}});
    }
    json prov{{"method", h.method}};
    if (h.method == "fixed_window") {
        prov["window_sec"] = h.window_sec;
    } else {
        prov["sigma_coarse"] = h.params.sigma_coarse;
        prov["sigma_fine"] = h.params.sigma_fine;
        prov["gap_max_sec"] = h.params.gap_max_sec;
    }
    return json{{"provenance", std::move(prov)}, {"coarse", std::move(coarse)}, {"fine", std::move(fine)}};
}

}  // namespace capsum
