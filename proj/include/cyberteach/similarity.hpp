#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cyberteach {

/// Source of token vectors for soft matching; implementations may fail per
/// token (endpoint down), in which case scoring falls back to exact matching.
class TokenEmbedder {
 public:
  virtual ~TokenEmbedder() = default;
  virtual std::optional<std::vector<double>> embed(const std::string& token) = 0;
};

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool embedding_fallback = false;  // set when the embedder failed for some token
};

std::vector<std::string> tokenize(const std::string& text);

/// Token-level precision/recall/F1 with greedy bag matching. Default matching
/// is exact; with an embedder attached, tokens also match when their cosine
/// similarity reaches the threshold.
class SimilarityScorer {
 public:
  SimilarityScorer() = default;
  explicit SimilarityScorer(std::shared_ptr<TokenEmbedder> embedder,
                            double cosine_threshold = 0.8);

  Scores score(const std::string& candidate, const std::string& reference) const;
  bool has_embedder() const { return embedder_ != nullptr; }

 private:
  bool tokens_match(const std::string& a, const std::string& b, bool* fallback) const;

  std::shared_ptr<TokenEmbedder> embedder_;
  double threshold_ = 0.8;
};

Scores precision_score(const std::string& candidate, const std::string& reference,
                       const SimilarityScorer& scorer);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace cyberteach
