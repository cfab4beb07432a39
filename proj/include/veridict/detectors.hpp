#pragma once

// The ten zero-shot detectors. Each returns a Score oriented so that higher
// means "more likely AI"; `Score::raw()` keeps the un-negated statistic.
//
// Streams are aligned with the scored positions of a request: a stream of
// length |body| covers every body token (conditioned on a prefix), a stream
// of length |body| - 1 starts at the second body token.

#include <cstdint>
#include <span>
#include <vector>

#include "veridict/backend.hpp"
#include "veridict/core.hpp"
#include "veridict/perturb.hpp"

namespace veridict {

struct DetectorConfig {
  std::size_t k = 5;        // perturbations per text
  double rate = 0.1;        // fraction of scored tokens replaced
  double sigma_floor = 1e-6;
  double epsilon_logrank = 1e-6;
  // Top-k streams: fail when the observed token is not listed. Otherwise the
  // rest mass is spread evenly over the unlisted tokens.
  bool strict_topk = true;
};

void validate(const DetectorConfig& cfg);

// Which capabilities a detector needs from its backend.
struct DetectorNeeds {
  bool full_distribution = false;
  bool sampling = false;
  bool rescoring = false;  // scores perturbed texts through the backend
  bool second_model = false;
};
DetectorNeeds needs(DetectorId id);

// Body tokens matching the stream's positions.
std::span<const TokenId> aligned_targets(const DistributionStream& stream, std::span<const TokenId> body);

// Floored log-probability of `token`.
double token_logprob(const Distribution& dist, TokenId token, bool strict = true);
// 1 + #tokens with higher probability + #tokens with equal probability and a
// lower id. Dense distributions only.
std::size_t token_rank(const Distribution& dist, TokenId token);
// Rank of every token id at once.
std::vector<std::uint32_t> rank_table(const Distribution& dist);
double entropy(const Distribution& dist);

double sum_log_likelihood(const DistributionStream& stream, std::span<const TokenId> targets,
                          bool strict = true);
double mean_log_rank(const DistributionStream& stream, std::span<const TokenId> targets);

// (original - mean(variants)) / max(sample stddev(variants), sigma_floor).
double perturbation_discrepancy(double original, std::span<const double> variants, double sigma_floor);

Score log_likelihood(const DistributionStream& stream, std::span<const TokenId> body,
                     const DetectorConfig& cfg = {});
Score entropy_score(const DistributionStream& stream);
Score rank_score(const DistributionStream& stream, std::span<const TokenId> body);
Score log_rank_score(const DistributionStream& stream, std::span<const TokenId> body);
Score lrr_score(const DistributionStream& stream, std::span<const TokenId> body,
                const DetectorConfig& cfg = {});

// Variants are rescored by `backend` with the original prefix.
Score detectgpt_score(const DistributionStream& original, const PerturbationSet& perturbed,
                      const Backend& backend, const DetectorConfig& cfg = {});
Score npr_score(const DistributionStream& original, const PerturbationSet& perturbed,
                const Backend& backend, const DetectorConfig& cfg = {});

// Variants are evaluated under the original stream's conditionals, so no
// further backend calls are made. Any equal-length set is accepted.
Score fast_detectgpt_score(const DistributionStream& original, const PerturbationSet& perturbed,
                           const DetectorConfig& cfg = {});
Score fast_npr_score(const DistributionStream& original, const PerturbationSet& perturbed,
                     const DetectorConfig& cfg = {});
// Draw sample_perturbations(req, original, cfg.rate, cfg.k, seed) from the
// original stream and score them; `backend` must be able to sample.
Score fast_detectgpt_score(const DistributionStream& original, const ScoringRequest& req,
                           const Backend& backend, const DetectorConfig& cfg, std::uint64_t seed);
Score fast_npr_score(const DistributionStream& original, const ScoringRequest& req,
                     const Backend& backend, const DetectorConfig& cfg, std::uint64_t seed);

// logPPL under M1 over the cross-perplexity of M1 against M2, negated.
Score binoculars_score(const DistributionStream& m1, const DistributionStream& m2,
                       std::span<const TokenId> body, const DetectorConfig& cfg = {});

}  // namespace veridict
