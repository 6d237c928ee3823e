#include "tsdeconv/markov.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>

#include "tsdeconv/sax.hpp"
#include "tsdeconv/special.hpp"

namespace tsdeconv {

std::vector<int> discretize(const Eigen::Ref<const VectorXd>& x, const QuantizerConfig& cfg) {
  if (cfg.Q < 2) throw std::invalid_argument("discretize: Q must be >= 2");
  if (x.size() < 2) throw std::invalid_argument("discretize: need at least 2 points");

  std::vector<int> bins(static_cast<std::size_t>(x.size()));
  if (cfg.mode == QuantizerMode::gaussian) {
    const VectorXd z = znormalize(x);
    const std::vector<double> cuts = gaussian_breakpoints(cfg.Q);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const auto it = std::upper_bound(cuts.begin(), cuts.end(), z[i]);
      bins[static_cast<std::size_t>(i)] = static_cast<int>(it - cuts.begin());
    }
  } else {
    // Empirical Q-iles with linear interpolation between order statistics.
    std::vector<double> sorted(x.data(), x.data() + x.size());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cuts(static_cast<std::size_t>(cfg.Q - 1));
    const double last = static_cast<double>(sorted.size() - 1);
    for (int k = 1; k < cfg.Q; ++k) {
      const double pos = last * static_cast<double>(k) / static_cast<double>(cfg.Q);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = static_cast<std::size_t>(std::ceil(pos));
      const double frac = pos - std::floor(pos);
      cuts[static_cast<std::size_t>(k - 1)] = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const auto it = std::upper_bound(cuts.begin(), cuts.end(), x[i]);
      bins[static_cast<std::size_t>(i)] = static_cast<int>(it - cuts.begin());
    }
  }
  return bins;
}

MatrixXd transition_matrix(const std::vector<int>& bins, int Q) {
  if (bins.size() < 2) throw std::invalid_argument("transition_matrix: need at least 2 points");
  MatrixXd counts = MatrixXd::Zero(Q, Q);
  for (std::size_t t = 0; t + 1 < bins.size(); ++t) {
    const int from = bins[t], to = bins[t + 1];
    if (from < 0 || from >= Q || to < 0 || to >= Q) {
      throw std::invalid_argument("transition_matrix: bin id out of range");
    }
    counts(from, to) += 1.0;
  }
  for (int i = 0; i < Q; ++i) {
    const double row_sum = counts.row(i).sum();
    if (row_sum > 0.0) counts.row(i) /= row_sum;
  }
  return counts;
}

TransitionGraph TransitionGraph::from_bins(const std::vector<int>& bins, int Q) {
  return TransitionGraph{Q, transition_matrix(bins, Q)};
}

TransitionGraph TransitionGraph::from_sequence(const Eigen::Ref<const VectorXd>& x,
                                               const QuantizerConfig& cfg) {
  return from_bins(discretize(x, cfg), cfg.Q);
}

double avg_degree(const TransitionGraph& g) {
  if (g.Q == 0) return 0.0;
  double total = 0.0;
  for (int i = 0; i < g.Q; ++i) {
    const double out = (g.weights.row(i).array() > 0.0).count();
    const double in = (g.weights.col(i).array() > 0.0).count();
    total += 0.5 * (out + in);
  }
  return total / static_cast<double>(g.Q);
}

namespace {

// Newman modularity of a partition on a symmetric adjacency matrix.
double modularity_of(const MatrixXd& adj, const std::vector<int>& community) {
  const auto n = adj.rows();
  const VectorXd degree = adj.rowwise().sum();
  const double two_m = degree.sum();
  if (two_m <= 0.0) return 0.0;
  double q = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (community[static_cast<std::size_t>(i)] != community[static_cast<std::size_t>(j)]) continue;
      q += adj(i, j) - degree[i] * degree[j] / two_m;
    }
  }
  return q / two_m;
}

std::vector<int> compact_labels(std::vector<int> labels) {
  std::vector<int> remap(labels.size(), -1);
  int next = 0;
  for (auto& c : labels) {
    if (remap[static_cast<std::size_t>(c)] < 0) remap[static_cast<std::size_t>(c)] = next++;
    c = remap[static_cast<std::size_t>(c)];
  }
  return labels;
}

// One Louvain level: greedy local moves on the given adjacency until no move
// improves modularity. Returns the compacted community assignment.
std::vector<int> louvain_level(const MatrixXd& adj, bool& moved_any) {
  const auto n = adj.rows();
  const VectorXd degree = adj.rowwise().sum();
  const double two_m = degree.sum();
  std::vector<int> community(static_cast<std::size_t>(n));
  std::iota(community.begin(), community.end(), 0);
  if (two_m <= 0.0) {
    moved_any = false;
    return community;
  }
  VectorXd community_degree = degree;  // total degree per community
  moved_any = false;

  bool improved = true;
  while (improved) {
    improved = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int current = community[static_cast<std::size_t>(i)];
      // Weight from i to each neighboring community (self-loops excluded from
      // the gain terms; they move with the node).
      std::vector<double> weight_to(static_cast<std::size_t>(n), 0.0);
      std::vector<int> neighbor_comms;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i || adj(i, j) == 0.0) continue;
        const int cj = community[static_cast<std::size_t>(j)];
        if (weight_to[static_cast<std::size_t>(cj)] == 0.0) neighbor_comms.push_back(cj);
        weight_to[static_cast<std::size_t>(cj)] += adj(i, j);
      }
      community_degree[current] -= degree[i];
      double best_gain = weight_to[static_cast<std::size_t>(current)] -
                         community_degree[current] * degree[i] / two_m;
      int best_comm = current;
      std::sort(neighbor_comms.begin(), neighbor_comms.end());
      for (const int c : neighbor_comms) {
        if (c == current) continue;
        const double gain =
            weight_to[static_cast<std::size_t>(c)] - community_degree[c] * degree[i] / two_m;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_comm = c;
        }
      }
      community_degree[best_comm] += degree[i];
      if (best_comm != current) {
        community[static_cast<std::size_t>(i)] = best_comm;
        improved = true;
        moved_any = true;
      }
    }
  }
  return compact_labels(std::move(community));
}

MatrixXd aggregate(const MatrixXd& adj, const std::vector<int>& community, int n_comms) {
  MatrixXd agg = MatrixXd::Zero(n_comms, n_comms);
  for (Eigen::Index i = 0; i < adj.rows(); ++i) {
    for (Eigen::Index j = 0; j < adj.cols(); ++j) {
      if (adj(i, j) != 0.0) {
        agg(community[static_cast<std::size_t>(i)], community[static_cast<std::size_t>(j)]) +=
            adj(i, j);
      }
    }
  }
  return agg;
}

}  // namespace

LouvainResult modularity_louvain(const TransitionGraph& g) {
  const MatrixXd base = 0.5 * (g.weights + g.weights.transpose());
  std::vector<int> assignment(static_cast<std::size_t>(g.Q));
  std::iota(assignment.begin(), assignment.end(), 0);

  MatrixXd level_adj = base;
  for (;;) {
    bool moved = false;
    const std::vector<int> level = louvain_level(level_adj, moved);
    if (!moved) break;
    for (auto& c : assignment) {
      c = level[static_cast<std::size_t>(c)];
    }
    const int n_comms = 1 + *std::max_element(level.begin(), level.end());
    if (n_comms == level_adj.rows()) break;
    level_adj = aggregate(level_adj, level, n_comms);
  }

  LouvainResult result;
  result.community = compact_labels(std::move(assignment));
  result.modularity = modularity_of(base, result.community);
  return result;
}

VectorXd pagerank(const TransitionGraph& g, double damping, double tol) {
  const int n = g.Q;
  if (n < 1) throw std::invalid_argument("pagerank: empty graph");
  const double uniform = 1.0 / static_cast<double>(n);
  VectorXd rank = VectorXd::Constant(n, uniform);
  std::vector<bool> dangling(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) dangling[static_cast<std::size_t>(i)] = g.weights.row(i).sum() <= 0.0;

  for (int iter = 0; iter < 10000; ++iter) {
    double dangling_mass = 0.0;
    for (int i = 0; i < n; ++i) {
      if (dangling[static_cast<std::size_t>(i)]) dangling_mass += rank[i];
    }
    VectorXd next = g.weights.transpose() * rank;
    next.array() += dangling_mass * uniform;
    next = damping * next.array() + (1.0 - damping) * uniform;
    const double delta = (next - rank).cwiseAbs().sum();
    rank.swap(next);
    if (delta < tol) break;
  }
  rank /= rank.sum();
  return rank;
}

PathLengthResult avg_path_length(const TransitionGraph& g) {
  const int n = g.Q;
  std::vector<std::vector<int>> succ(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (g.weights(i, j) > 0.0) succ[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  long long pair_count = 0;
  long long dist_sum = 0;
  std::vector<int> dist(static_cast<std::size_t>(n));
  std::deque<int> queue;
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[static_cast<std::size_t>(s)] = 0;
    queue.assign(1, s);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (const int v : succ[static_cast<std::size_t>(u)]) {
        if (dist[static_cast<std::size_t>(v)] < 0) {
          dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
          queue.push_back(v);
        }
      }
    }
    for (int t = 0; t < n; ++t) {
      if (t != s && dist[static_cast<std::size_t>(t)] > 0) {
        ++pair_count;
        dist_sum += dist[static_cast<std::size_t>(t)];
      }
    }
  }
  if (pair_count == 0) return {0.0, false};
  return {static_cast<double>(dist_sum) / static_cast<double>(pair_count), true};
}

GraphStats graph_stats(const TransitionGraph& g) {
  GraphStats s;
  s.avg_degree = avg_degree(g);
  s.modularity = modularity_louvain(g).modularity;
  s.pagerank_max = pagerank(g).maxCoeff();
  const PathLengthResult p = avg_path_length(g);
  s.avg_path_length = p.value;
  s.path_defined = p.has_pairs;
  return s;
}

double welch_p_value(std::span<const double> group_a, std::span<const double> group_b) {
  if (group_a.size() < 2 || group_b.size() < 2) {
    throw std::invalid_argument("welch_p_value: each group needs at least 2 samples");
  }
  const auto stats = [](std::span<const double> g) {
    const double n = static_cast<double>(g.size());
    double mean = 0.0;
    for (const double v : g) mean += v;
    mean /= n;
    double var = 0.0;
    for (const double v : g) var += (v - mean) * (v - mean);
    var /= (n - 1.0);  // sample variance
    return std::pair{mean, var};
  };
  const auto [mean_a, var_a] = stats(group_a);
  const auto [mean_b, var_b] = stats(group_b);
  const double na = static_cast<double>(group_a.size());
  const double nb = static_cast<double>(group_b.size());
  const double se2 = var_a / na + var_b / nb;
  if (se2 <= 0.0) return mean_a == mean_b ? 1.0 : 0.0;
  const double t = (mean_a - mean_b) / std::sqrt(se2);
  const double dof = se2 * se2 / (var_a * var_a / (na * na * (na - 1.0)) +
                                  var_b * var_b / (nb * nb * (nb - 1.0)));
  return student_t_two_sided(t, dof);
}

namespace {

void write_or_throw(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw FormatError("write failed: " + path.string());
}

std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", w);
  return buf;
}

}  // namespace

void export_graph(const TransitionGraph& g, const std::filesystem::path& path,
                  GraphFormat format) {
  std::string out;
  if (format == GraphFormat::dot) {
    out += "digraph G {\n";
    for (int i = 0; i < g.Q; ++i) out += "  " + std::to_string(i) + ";\n";
    for (int i = 0; i < g.Q; ++i) {
      for (int j = 0; j < g.Q; ++j) {
        if (g.weights(i, j) > 0.0) {
          out += "  " + std::to_string(i) + " -> " + std::to_string(j) + " [weight=" +
                 format_weight(g.weights(i, j)) + "];\n";
        }
      }
    }
    out += "}\n";
  } else {
    out +=
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
        "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
        "  <graph id=\"G\" edgedefault=\"directed\">\n";
    for (int i = 0; i < g.Q; ++i) {
      out += "    <node id=\"n" + std::to_string(i) + "\"/>\n";
    }
    for (int i = 0; i < g.Q; ++i) {
      for (int j = 0; j < g.Q; ++j) {
        if (g.weights(i, j) > 0.0) {
          out += "    <edge source=\"n" + std::to_string(i) + "\" target=\"n" + std::to_string(j) +
                 "\"><data key=\"weight\">" + format_weight(g.weights(i, j)) + "</data></edge>\n";
        }
      }
    }
    out += "  </graph>\n</graphml>\n";
  }
  write_or_throw(path, out);
}

}  // namespace tsdeconv
