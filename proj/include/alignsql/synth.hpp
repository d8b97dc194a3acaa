#pragma once

#include <cstdint>

#include "alignsql/corpus.hpp"

namespace alignsql {

struct SynthOptions {
  std::uint64_t seed = 1;
  std::size_t size = 200;
  std::size_t examples_per_table = 5;
  /// Probability that a column is referred to by a noun shared by every
  /// concept of its kind, so only the alignment says which one is meant.
  double vague_noun_rate = 0.3;
};

/// Templated questions over random small tables with hand-planted
/// alignments. Questions name columns through nouns that never occur in
/// headers and mention cell values in lower case. Every literal carries its
/// question span. Output passes the same validation as a loaded corpus.
Corpus synthesize(const SynthOptions& options);

}  // namespace alignsql
