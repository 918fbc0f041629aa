#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "vcprune/analysis.hpp"
#include "vcprune/budget.hpp"
#include "vcprune/csv.hpp"
#include "vcprune/flops.hpp"
#include "vcprune/model.hpp"
#include "vcprune/run_config.hpp"

namespace vcprune {

namespace detail {

template <typename Real>
ForwardOutput<Real> run_forward(const RunConfig &rc, bool capture) {
  const auto weights = init_weights<Real>(rc.model, rc.seed);
  const auto input = random_input<Real>(rc.model, rc.seed);
  return forward(rc.model, weights, input, rc.prune, capture);
}

inline std::vector<int> all_visual_tokens(const TokenLayout &layout) {
  std::vector<int> v(layout.n_visual());
  for (int i = 0; i < layout.n_visual(); ++i) v[i] = i;
  return v;
}

/// Seeded selection of `count` distinct visual tokens.
inline std::vector<int> select_visual_tokens(const TokenLayout &layout, int count,
                                             std::uint64_t seed) {
  const int nv = layout.n_visual();
  if (count < 0 || count > nv)
    throw std::invalid_argument("token selection size out of range [0, n_visual]");
  std::vector<int> pool = all_visual_tokens(layout);
  SplitMix64 rng(mix_seed(seed, 0x5e1ec7ULL));
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(nv - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

template <typename Real>
void write_forward_outputs(const RunConfig &rc, const ForwardOutput<Real> &out, bool capture,
                           int n_bins) {
  namespace fs = std::filesystem;
  const fs::path dir(rc.output_dir);
  atomic_write_file(dir / "hidden_summary.csv", hidden_summary_csv(out.hidden, rc.model.layout));
  if (capture) {
    atomic_write_file(dir / "attention_records.csv", attention_records_csv(out.records));
    const auto profile = distance_profile(out.records, rc.model.layout,
                                          all_visual_tokens(rc.model.layout), n_bins);
    atomic_write_file(dir / "distance_profile.csv", distance_profile_csv(profile));
  }
}

template <typename Real>
void write_analyze_outputs(const RunConfig &rc, int n_tokens, int n_bins) {
  namespace fs = std::filesystem;
  const auto out = run_forward<Real>(rc, /*capture=*/true);
  const fs::path dir(rc.output_dir);
  const auto queries = select_visual_tokens(rc.model.layout, n_tokens, rc.seed);
  const auto profile = distance_profile(out.records, rc.model.layout, queries, n_bins);
  atomic_write_file(dir / "distance_profile.csv", distance_profile_csv(profile));
  const auto cross = cross_modal_profile(out.records, rc.model.layout);
  atomic_write_file(dir / "cross_modal.csv", cross_modal_csv(cross));
  const auto mass = head_activity(out.records, rc.model.layout, HeadActivityMode::kWeightMass);
  atomic_write_file(dir / "head_activity_weight_mass.csv", head_activity_csv(mass, "weight_mass"));
  const auto norms = head_activity(out.records, rc.model.layout, HeadActivityMode::kOutputNorm);
  atomic_write_file(dir / "head_activity_output_norm.csv",
                    head_activity_csv(norms, "output_norm"));
}

}  // namespace detail

/// forward: run the model once, write the hidden-state summary and, with
/// capture, the attention records plus an all-token distance profile.
inline int cmd_forward(const RunConfig &rc, bool capture, int n_bins = 16) {
  if (rc.precision == Precision::kSingle) {
    const auto out = detail::run_forward<float>(rc, capture);
    detail::write_forward_outputs(rc, out, capture, n_bins);
  } else {
    const auto out = detail::run_forward<double>(rc, capture);
    detail::write_forward_outputs(rc, out, capture, n_bins);
  }
  return 0;
}

/// analyze: capture a forward pass and write the redundancy diagnostics
/// (distance profile over a seeded token selection, cross-modal profile,
/// and head activity in both modes).
inline int cmd_analyze(const RunConfig &rc, int n_tokens, int n_bins = 16) {
  if (rc.precision == Precision::kSingle)
    detail::write_analyze_outputs<float>(rc, n_tokens, n_bins);
  else
    detail::write_analyze_outputs<double>(rc, n_tokens, n_bins);
  return 0;
}

/// flops: price the configured model dense and pruned; writes CSVs plus a
/// text table and prints the totals.
inline int cmd_flops(const RunConfig &rc, std::ostream &os = std::cout) {
  namespace fs = std::filesystem;
  const int nv = rc.model.layout.n_visual();
  const int nt = rc.model.layout.n_text;
  const auto dense = flops_dense(rc.model, nv, nt);
  const auto pruned = flops_pruned(rc.model, rc.prune, nv, nt);
  const fs::path dir(rc.output_dir);
  atomic_write_file(dir / "flops_dense.csv", flops_csv(dense));
  atomic_write_file(dir / "flops_pruned.csv", flops_csv(pruned));
  atomic_write_file(dir / "flops.txt", flops_text_table(dense) + "\n" + flops_text_table(pruned));
  os << "dense total:  " << format_number(dense.grand_total) << "\n";
  os << "pruned total: " << format_number(pruned.grand_total) << "\n";
  return 0;
}

/// sweep: dense and pruned totals per requested visual-token count; rows are
/// computed by a bounded worker pool and written in input order.
inline int cmd_sweep(const RunConfig &rc, const std::vector<int> &nv_list, int workers = 1,
                     std::ostream &os = std::cout) {
  if (nv_list.empty()) throw std::invalid_argument("sweep: need at least one --nv value");
  if (workers < 1) throw std::invalid_argument("sweep: --workers must be >= 1");
  std::vector<SweepRow> rows(nv_list.size());
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= nv_list.size()) return;
      rows[i] = scaling_sweep(rc.model, rc.prune, {nv_list[i]}, rc.model.layout.n_text).front();
    }
  };
  const int n_threads = std::min<int>(workers, static_cast<int>(nv_list.size()));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto &t : pool) t.join();
  atomic_write_file(std::filesystem::path(rc.output_dir) / "sweep.csv", sweep_csv(rows));
  for (const auto &row : rows)
    os << row.n_visual << "," << format_number(row.dense) << "," << format_number(row.pruned)
       << "\n";
  return 0;
}

/// solve: exhaustive budget search over the config's search section; prints
/// the feasible configs ascending by cost and writes solve.csv.
inline int cmd_solve(const RunConfig &rc, double target_flops, std::ostream &os = std::cout) {
  if (!rc.search)
    throw std::invalid_argument("solve: config file needs a \"search\" section");
  const auto solutions = solve_budget(rc.model, target_flops, *rc.search);
  std::string csv = "flops,radius,heads_per_layer,ffn_keep_ratio,suffix_dropped\n";
  for (const auto &sol : solutions) {
    const int heads = static_cast<int>(sol.prune.kept_heads.front().size());
    const int dropped = rc.model.n_layers - sol.prune.last_visual_layer;
    csv += format_number(sol.flops) + "," + format_number(sol.prune.radius) + "," +
           std::to_string(heads) + "," + format_number(sol.prune.ffn_keep_ratio) + "," +
           std::to_string(dropped) + "\n";
    os << "flops " << format_number(sol.flops) << "  radius " << sol.prune.radius << "  heads "
       << heads << "  ffn_keep " << sol.prune.ffn_keep_ratio << "  suffix_dropped " << dropped
       << "\n";
  }
  if (solutions.empty()) os << "no feasible configuration\n";
  atomic_write_file(std::filesystem::path(rc.output_dir) / "solve.csv", csv);
  return 0;
}

}  // namespace vcprune
