#include "tiny.hpp"

#include <numeric>

namespace testsupport {

using nlohmann::json;

alignsql::Corpus tiny_corpus() {
  json tables{{"tables", {{"people", {{"headers", {"Name"}}, {"rows", {{"Ann"}, {"Bo"}}}}}}}};
  json examples{{"examples",
                 {{{"id", "tiny-1"},
                   {"table_id", "people"},
                   {"question", {"who", "ann"}},
                   {"sql", "SELECT c1 FROM w WHERE c1 = 'Ann'"},
                   {"alignments",
                    {{{"question", {0}}, {"sql", {1}}},
                     {{"question", {1}}, {"sql", {5}}},
                     {{"question", {1}}, {"sql", {7}}}}}}}}};
  alignsql::Corpus c = alignsql::corpus_from_json(tables, examples);
  alignsql::derive_literal_spans(c.examples);
  return c;
}

alignsql::Config tiny_config() {
  alignsql::Config c;
  c.word_dim = 3;
  c.char_dim = 2;
  c.char_hidden = 2;
  c.pos_dim = 2;
  c.ner_dim = 2;
  c.exact_match_dim = 2;
  c.dtype_dim = 2;
  c.hidden = 3;
  c.encoder_layers = 1;
  c.decoder_embedding = 3;
  c.decoder_hidden = 3;
  c.decoder_layers = 2;
  c.mlp_hidden = 3;
  c.min_word_count = 1;
  return c;
}

alignsql::Model make_model(const alignsql::Config& config, const alignsql::Corpus& corpus) {
  std::vector<std::size_t> all(corpus.examples.size());
  std::iota(all.begin(), all.end(), 0);
  return alignsql::Model(config, alignsql::Vocabularies::build(corpus, all, static_cast<std::size_t>(config.min_word_count)));
}

}  // namespace testsupport
