#include "cyberteach/similarity.hpp"

#include <cctype>
#include <cmath>

namespace cyberteach {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

SimilarityScorer::SimilarityScorer(std::shared_ptr<TokenEmbedder> embedder,
                                   double cosine_threshold)
    : embedder_(std::move(embedder)), threshold_(cosine_threshold) {}

bool SimilarityScorer::tokens_match(const std::string& a, const std::string& b,
                                    bool* fallback) const {
  if (a == b) return true;
  if (embedder_ == nullptr) return false;
  auto va = embedder_->embed(a);
  auto vb = embedder_->embed(b);
  if (!va || !vb) {
    *fallback = true;
    return false;
  }
  return cosine_similarity(*va, *vb) >= threshold_;
}

Scores SimilarityScorer::score(const std::string& candidate,
                               const std::string& reference) const {
  Scores out;
  std::vector<std::string> cand = tokenize(candidate);
  std::vector<std::string> ref = tokenize(reference);
  if (cand.empty() || ref.empty()) return out;

  int matched_cand = 0;
  for (const auto& c : cand) {
    for (const auto& r : ref) {
      if (tokens_match(c, r, &out.embedding_fallback)) {
        matched_cand += 1;
        break;
      }
    }
  }
  int matched_ref = 0;
  for (const auto& r : ref) {
    for (const auto& c : cand) {
      if (tokens_match(r, c, &out.embedding_fallback)) {
        matched_ref += 1;
        break;
      }
    }
  }
  out.precision = static_cast<double>(matched_cand) / cand.size();
  out.recall = static_cast<double>(matched_ref) / ref.size();
  if (out.precision + out.recall > 0.0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

Scores precision_score(const std::string& candidate, const std::string& reference,
                       const SimilarityScorer& scorer) {
  return scorer.score(candidate, reference);
}

}  // namespace cyberteach
