#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tsdeconv/errors.hpp"

namespace tsdeconv {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class QuantizerMode { gaussian, quantile };

struct QuantizerConfig {
  int Q = 10;
  QuantizerMode mode = QuantizerMode::gaussian;
};

/// Maps a real sequence to bin ids in [0, Q). Gaussian mode z-normalizes and
/// cuts at the equiprobable normal thresholds (the same table the SAX alphabet
/// uses); quantile mode cuts at empirical Q-iles of x itself.
std::vector<int> discretize(const Eigen::Ref<const VectorXd>& x, const QuantizerConfig& cfg);

/// First-order transition probabilities of a bin sequence. Rows with no
/// outgoing transitions stay all-zero.
MatrixXd transition_matrix(const std::vector<int>& bins, int Q);

/// Weighted directed graph over Q bin nodes; arcs are the nonzero transition
/// probabilities.
struct TransitionGraph {
  int Q = 0;
  MatrixXd weights;  // Q x Q, each nonzero row sums to 1

  static TransitionGraph from_sequence(const Eigen::Ref<const VectorXd>& x,
                                       const QuantizerConfig& cfg);
  static TransitionGraph from_bins(const std::vector<int>& bins, int Q);

  Eigen::Index arc_count() const { return (weights.array() > 0.0).count(); }
};

/// Mean over nodes of (in-degree + out-degree) / 2, counting distinct arcs.
double avg_degree(const TransitionGraph& g);

struct LouvainResult {
  std::vector<int> community;  // node -> community id, compacted
  double modularity = 0.0;
};

/// Louvain greedy modularity optimization on the symmetrized graph
/// (weights averaged across directions), deterministic node order.
LouvainResult modularity_louvain(const TransitionGraph& g);

/// Damped power iteration with dangling rows redistributed uniformly.
/// The result sums to 1.
VectorXd pagerank(const TransitionGraph& g, double damping = 0.85, double tol = 1e-10);

struct PathLengthResult {
  double value = 0.0;
  bool has_pairs = false;  // false when no ordered pair is reachable
};

/// Mean unweighted directed shortest-path length over all ordered reachable
/// pairs (i != j); unreachable pairs are excluded.
PathLengthResult avg_path_length(const TransitionGraph& g);

/// The four per-graph summary statistics reported together.
struct GraphStats {
  double avg_degree = 0.0;
  double modularity = 0.0;
  double pagerank_max = 0.0;
  double avg_path_length = 0.0;
  bool path_defined = false;
};

GraphStats graph_stats(const TransitionGraph& g);

/// Two-sided Welch t-test p-value between two samples of per-graph statistics.
/// Zero-variance groups with equal means give p = 1 (no evidence), unequal
/// means give p = 0.
double welch_p_value(std::span<const double> group_a, std::span<const double> group_b);

enum class GraphFormat { graphml, dot };

/// Writes nodes 0..Q-1 and the weighted arcs in deterministic order; the edge
/// weight attribute is named "weight".
void export_graph(const TransitionGraph& g, const std::filesystem::path& path, GraphFormat format);

}  // namespace tsdeconv
