#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "brm/feature.hpp"
#include "brm/ratio_map.hpp"

namespace brm {

struct MatcherConfig {
    double e1 = 0.3;        // feature error threshold (sum of abs diffs)
    double epsilon = 25.0;  // distance error constant, meters
    double d_max = 75.0;    // convergence determination constant, meters
    std::size_t k_cap = 50000;
    bool continue_after_convergence = true;

    void validate() const;
};

/// Traveled distance since the previous matched frame, meters.
struct OdometryDelta {
    double d = 0;
};

struct Candidate {
    std::uint32_t ix = 0, iy = 0;  // lattice cell
    double x = 0, y = 0;           // world meters
    std::int64_t parent = -1;      // index into the previous generation, -1 = none
    double parent_x = 0, parent_y = 0;
    double residual = 0;

    bool operator==(const Candidate&) const = default;
};

/// A movement-constrained cell before feature filtering: lattice cell
/// index paired with the previous-generation candidate it came from.
struct PropagatedCell {
    std::uint32_t cell = 0;
    std::int32_t parent = -1;
};

enum class Phase { Searching, Tracking, Converged };

const char* to_string(Phase p);

struct CandidateSet {
    int generation = 0;
    Phase phase = Phase::Searching;
    std::vector<Candidate> candidates;
    std::optional<Point> estimate;  // set once a convergence event has occurred
};

/// Heading implied by two consecutive positions, full-quadrant, in
/// (-pi, pi]. Empty when the positions coincide (caller falls back to the
/// unconstrained-heading path).
std::optional<double> heading(Point newer, Point older);

/// Whole-map search: every valid lattice cell with residual < e1, as
/// parentless candidates, capped at k_cap by smallest residual
/// (row-major tie-break).
std::vector<Candidate> global_match(const FeatureVector& f, const RatioMapSet& map,
                                    const MatcherConfig& cfg);

/// Movement-constrained cells for one step. Parented candidates emit the
/// box |x-c| < eps around the dead-reckoned center; parentless ones emit
/// the annulus | |cell-p| - d | <= eps. Only valid lattice cells are
/// emitted; (cell, parent) pairs are unique.
std::vector<PropagatedCell> propagate(const std::vector<Candidate>& prev, double d,
                                      const RatioMapSet& map, const MatcherConfig& cfg);

/// Feature filter: keeps propagated cells with residual < e1, records the
/// residual and parent link, caps at k_cap by residual.
std::vector<Candidate> filter(const std::vector<PropagatedCell>& cells,
                              const std::vector<Candidate>& prev, const FeatureVector& f,
                              const RatioMapSet& map, const MatcherConfig& cfg);

struct Convergence {
    Point estimate;
    double spread = 0;  // max candidate distance to the centroid
};

/// Centroid when every candidate lies within d_max of it.
std::optional<Convergence> convergence_check(const CandidateSet& set, const MatcherConfig& cfg);

struct ConvergenceEvent {
    int generation = 0;
    Point estimate;
    double spread = 0;
};

struct StepResult {
    Phase phase = Phase::Searching;
    bool converged_now = false;  // criterion held this step
    bool event = false;          // fresh transition into convergence
    std::optional<Point> estimate;
    std::size_t candidate_count = 0;
};

/// The candidate state machine: global search when no candidates exist,
/// otherwise propagate + filter, then the convergence check. In the
/// freeze mode (continue_after_convergence = false) candidates stop
/// evolving after the first convergence.
class Matcher {
public:
    Matcher(std::shared_ptr<const RatioMapSet> map, MatcherConfig cfg);

    StepResult step(const FeatureVector& f, OdometryDelta delta);

    /// Drops all candidates (kidnapped-robot reset): phase returns to
    /// Searching and the next step scans the whole map.
    void clear_candidates();

    const CandidateSet& state() const { return set_; }
    const std::vector<ConvergenceEvent>& events() const { return events_; }
    const RatioMapSet& map() const { return *map_; }
    const MatcherConfig& config() const { return cfg_; }

private:
    std::shared_ptr<const RatioMapSet> map_;
    MatcherConfig cfg_;
    CandidateSet set_;
    std::vector<ConvergenceEvent> events_;
    bool criterion_held_ = false;
    bool frozen_ = false;
};

/// CSV rows (generation, x, y, residual, parent_index) for candidate dumps.
void dump_candidates_csv(std::ostream& out, int generation, const std::vector<Candidate>& cands,
                         bool header = true);

}  // namespace brm
