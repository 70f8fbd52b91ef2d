#include "brm/matcher.hpp"

#include <algorithm>
#include <cmath>

namespace brm {

void MatcherConfig::validate() const {
    if (!(e1 > 0)) throw Error("bad_config", "e1 must be positive");
    if (!(epsilon > 0)) throw Error("bad_config", "epsilon must be positive");
    if (!(d_max > 0)) throw Error("bad_config", "d_max must be positive");
    if (k_cap < 1) throw Error("bad_config", "k_cap must be at least 1");
}

const char* to_string(Phase p) {
    switch (p) {
        case Phase::Searching: return "searching";
        case Phase::Tracking: return "tracking";
        case Phase::Converged: return "converged";
    }
    return "unknown";
}

std::optional<double> heading(Point newer, Point older) {
    if (newer.x == older.x && newer.y == older.y) return std::nullopt;
    return std::atan2(newer.y - older.y, newer.x - older.x);
}

namespace {

// Residual-first candidate ordering used for k_cap truncation; candidates
// are stored in row-major (cell, parent) order afterwards.
struct ResidualKey {
    double residual;
    std::uint64_t cell;
    std::int64_t parent;

    bool operator<(const ResidualKey& o) const {
        if (residual != o.residual) return residual < o.residual;
        if (cell != o.cell) return cell < o.cell;
        return parent < o.parent;
    }
};

ResidualKey key_of(const Candidate& c, const RatioMapSet& map) {
    return {c.residual, map.index_of(static_cast<int>(c.ix), static_cast<int>(c.iy)), c.parent};
}

void cap_and_order(std::vector<Candidate>& cands, const RatioMapSet& map, std::size_t k_cap) {
    if (cands.size() > k_cap) {
        std::nth_element(cands.begin(), cands.begin() + k_cap, cands.end(),
                         [&](const Candidate& a, const Candidate& b) {
                             return key_of(a, map) < key_of(b, map);
                         });
        cands.resize(k_cap);
    }
    std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
        const auto ka = map.index_of(static_cast<int>(a.ix), static_cast<int>(a.iy));
        const auto kb = map.index_of(static_cast<int>(b.ix), static_cast<int>(b.iy));
        if (ka != kb) return ka < kb;
        return a.parent < b.parent;
    });
}

// Lattice index range [lo, hi] whose world coordinate can satisfy
// |coord - center| < eps; bounds are conservative, the caller re-tests
// each cell exactly.
std::pair<int, int> lattice_range(double center, double eps, double origin, double step,
                                  int count) {
    int lo = static_cast<int>(std::floor((center - eps - origin) / step)) - 1;
    int hi = static_cast<int>(std::ceil((center + eps - origin) / step)) + 1;
    return {std::max(lo, 0), std::min(hi, count - 1)};
}

}  // namespace

std::vector<Candidate> global_match(const FeatureVector& f, const RatioMapSet& map,
                                    const MatcherConfig& cfg) {
    std::vector<Candidate> out;
    for (int iy = 0; iy < map.lattice_h; ++iy) {
        for (int ix = 0; ix < map.lattice_w; ++ix) {
            if (!map.valid(ix, iy)) continue;
            const double res = map.residual(ix, iy, f);
            if (!(res < cfg.e1)) continue;
            const Point p = map.world_of(ix, iy);
            out.push_back({static_cast<std::uint32_t>(ix), static_cast<std::uint32_t>(iy), p.x,
                           p.y, -1, 0, 0, res});
        }
    }
    cap_and_order(out, map, cfg.k_cap);
    return out;
}

std::vector<PropagatedCell> propagate(const std::vector<Candidate>& prev, double d,
                                      const RatioMapSet& map, const MatcherConfig& cfg) {
    if (prev.empty()) throw Error("bad_state", "propagate requires a non-empty candidate set");
    if (!(d >= 0) || !std::isfinite(d))
        throw Error("bad_odometry", "traveled distance must be finite and non-negative");

    const double step = map.stride * map.transform.resolution;
    const double ox = map.transform.origin_x, oy = map.transform.origin_y;
    std::vector<PropagatedCell> out;

    for (std::size_t pi = 0; pi < prev.size(); ++pi) {
        const Candidate& p = prev[pi];
        std::optional<double> theta;
        if (p.parent >= 0) theta = heading({p.x, p.y}, {p.parent_x, p.parent_y});

        if (theta) {
            // heading constraint: box around the dead-reckoned center
            const double cx = p.x + d * std::cos(*theta);
            const double cy = p.y + d * std::sin(*theta);
            const auto [x0, x1] = lattice_range(cx, cfg.epsilon, ox, step, map.lattice_w);
            const auto [y0, y1] = lattice_range(cy, cfg.epsilon, oy, step, map.lattice_h);
            for (int iy = y0; iy <= y1; ++iy) {
                const double wy = oy + iy * step;
                if (!(std::abs(wy - cy) < cfg.epsilon)) continue;
                for (int ix = x0; ix <= x1; ++ix) {
                    const double wx = ox + ix * step;
                    if (!(std::abs(wx - cx) < cfg.epsilon)) continue;
                    if (!map.valid(ix, iy)) continue;
                    out.push_back({static_cast<std::uint32_t>(map.index_of(ix, iy)),
                                   static_cast<std::int32_t>(pi)});
                }
            }
        } else {
            // heading unconstrained: annulus at traveled distance d
            const double reach = d + cfg.epsilon;
            const auto [x0, x1] = lattice_range(p.x, reach, ox, step, map.lattice_w);
            const auto [y0, y1] = lattice_range(p.y, reach, oy, step, map.lattice_h);
            for (int iy = y0; iy <= y1; ++iy) {
                const double dy = oy + iy * step - p.y;
                for (int ix = x0; ix <= x1; ++ix) {
                    const double dx = ox + ix * step - p.x;
                    if (!(std::abs(std::sqrt(dx * dx + dy * dy) - d) <= cfg.epsilon)) continue;
                    if (!map.valid(ix, iy)) continue;
                    out.push_back({static_cast<std::uint32_t>(map.index_of(ix, iy)),
                                   static_cast<std::int32_t>(pi)});
                }
            }
        }
    }
    return out;
}

std::vector<Candidate> filter(const std::vector<PropagatedCell>& cells,
                              const std::vector<Candidate>& prev, const FeatureVector& f,
                              const RatioMapSet& map, const MatcherConfig& cfg) {
    std::vector<Candidate> out;
    for (const auto& pc : cells) {
        const int ix = static_cast<int>(pc.cell % map.lattice_w);
        const int iy = static_cast<int>(pc.cell / map.lattice_w);
        const double res = map.residual(ix, iy, f);
        if (!(res < cfg.e1)) continue;
        const Point p = map.world_of(ix, iy);
        Candidate c{static_cast<std::uint32_t>(ix), static_cast<std::uint32_t>(iy), p.x, p.y,
                    pc.parent, 0, 0, res};
        if (pc.parent >= 0) {
            c.parent_x = prev[pc.parent].x;
            c.parent_y = prev[pc.parent].y;
        }
        out.push_back(c);
    }
    cap_and_order(out, map, cfg.k_cap);
    return out;
}

std::optional<Convergence> convergence_check(const CandidateSet& set, const MatcherConfig& cfg) {
    if (set.candidates.empty())
        throw Error("bad_state", "convergence check requires a non-empty candidate set");
    double sx = 0, sy = 0;
    for (const auto& c : set.candidates) {
        sx += c.x;
        sy += c.y;
    }
    const Point centroid{sx / set.candidates.size(), sy / set.candidates.size()};
    double spread = 0;
    for (const auto& c : set.candidates)
        spread = std::max(spread, std::hypot(c.x - centroid.x, c.y - centroid.y));
    if (spread < cfg.d_max) return Convergence{centroid, spread};
    return std::nullopt;
}

Matcher::Matcher(std::shared_ptr<const RatioMapSet> map, MatcherConfig cfg)
    : map_(std::move(map)), cfg_(cfg) {
    if (!map_) throw Error("bad_state", "matcher requires a ratio map");
    cfg_.validate();
}

StepResult Matcher::step(const FeatureVector& f, OdometryDelta delta) {
    if (static_cast<int>(f.size()) != map_->n)
        throw Error("bad_feature", "feature length does not match the ratio map layer count");

    if (frozen_)
        return {set_.phase, false, false, std::nullopt, set_.candidates.size()};

    set_.generation += 1;
    if (set_.candidates.empty()) {
        set_.candidates = global_match(f, *map_, cfg_);
    } else {
        const auto cells = propagate(set_.candidates, delta.d, *map_, cfg_);
        set_.candidates = filter(cells, set_.candidates, f, *map_, cfg_);
    }
    set_.phase = set_.candidates.empty() ? Phase::Searching : Phase::Tracking;

    StepResult result;
    result.candidate_count = set_.candidates.size();
    if (!set_.candidates.empty()) {
        if (const auto conv = convergence_check(set_, cfg_)) {
            set_.phase = Phase::Converged;
            set_.estimate = conv->estimate;
            result.converged_now = true;
            result.estimate = conv->estimate;
            result.event = !criterion_held_;
            if (result.event)
                events_.push_back({set_.generation, conv->estimate, conv->spread});
            criterion_held_ = true;
            if (!cfg_.continue_after_convergence) frozen_ = true;
        } else {
            criterion_held_ = false;
        }
    } else {
        criterion_held_ = false;
    }
    result.phase = set_.phase;
    return result;
}

void Matcher::clear_candidates() {
    set_.candidates.clear();
    set_.phase = Phase::Searching;
    criterion_held_ = false;
    frozen_ = false;  // a deliberate reset restarts the machine in either mode
}

void dump_candidates_csv(std::ostream& out, int generation, const std::vector<Candidate>& cands,
                         bool header) {
    if (header) out << "generation,x,y,residual,parent_index\n";
    char buf[128];
    for (const auto& c : cands) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.9f,%lld\n", generation, c.x, c.y,
                      c.residual, static_cast<long long>(c.parent));
        out << buf;
    }
}

}  // namespace brm
