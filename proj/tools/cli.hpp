#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace bovir::cli {

/// Every knob of an experiment. Defaults are the tuned values.
struct ExperimentConfig {
  std::string corpus;
  std::string corpus_format = "auto";  // auto | trec | tsv
  std::string embeddings;
  std::string model;
  std::string index;
  std::string topics;
  std::string qrels;
  std::string run;
  std::string run_a;
  std::string run_b;
  std::string output;

  std::string stopwords = "smart";  // smart | none | path
  bool stemming = true;
  bool lowercase = true;
  bool normalize = true;

  std::size_t k = 100;
  std::uint64_t seed = 42;
  std::size_t max_iterations = 50;
  double rel_tol = 1e-4;

  double lambda = 0.4;
  double alpha = 0.4;
  std::string variant = "kmeans";
  std::size_t rerank_depth = 1000;
  std::size_t top_k = 1000;
  std::string run_tag;  // empty: variant name

  std::size_t fb_docs = 10;
  std::size_t fb_terms = 20;
  double beta = 0.6;

  std::string alphas = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::string ks = "10,50,100,200,300";

  unsigned threads = 1;
};

/// key=value lines in a fixed order; readable back through --config.
std::string to_config_text(const ExperimentConfig& config);

/// Parses `args` (without the program name) and runs the subcommand.
/// Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bovir::cli
