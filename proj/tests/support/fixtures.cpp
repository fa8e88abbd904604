#include "support/fixtures.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace jointnlu::testing {

namespace {

struct Row {
  const char* intent;
  const char* text;  // "word/TAG" pairs, O when no tag given
};

Utterance from_row(const Row& r, std::size_t id) {
  Utterance u;
  u.id = id;
  u.intent = r.intent;
  std::istringstream in(r.text);
  std::string item;
  while (in >> item) {
    const auto slash = item.find('/');
    u.tokens.push_back(item.substr(0, slash));
    u.tags.push_back(slash == std::string::npos ? "O" : item.substr(slash + 1));
  }
  return u;
}

Corpus from_rows(std::initializer_list<Row> rows, const char* name) {
  Corpus c;
  c.name = name;
  for (const Row& r : rows) c.utterances.push_back(from_row(r, c.utterances.size()));
  return c;
}

}  // namespace

Corpus memorization_fixture() {
  return from_rows(
      {
          {"flight", "show flights from boston/B-city to denver/B-city on monday/B-date"},
          {"flight", "show flights from new/B-city york/I-city to dallas/B-city on friday/B-date"},
          {"flight", "i need a flight to san/B-city francisco/I-city in the morning/B-time"},
          {"flight", "list delta/B-airline flights from boston/B-city"},
          {"flight", "list american/B-airline airlines/I-airline flights from denver/B-city"},
          {"flight", "i need a flight to dallas/B-city in the evening/B-time"},
          {"flight", "show flights from san/B-city francisco/I-city to boston/B-city on tuesday/B-date"},
          {"airfare", "how much is a ticket from denver/B-city to new/B-city york/I-city"},
          {"airfare", "what is the fare on united/B-airline on monday/B-date"},
          {"airfare", "cheapest fare to boston/B-city"},
          {"airfare", "what is the fare on delta/B-airline on friday/B-date"},
          {"airfare", "how much is a ticket from dallas/B-city to san/B-city francisco/I-city"},
          {"airfare", "cheapest fare to new/B-city york/I-city at noon/B-time"},
          {"ground_service", "ground transportation in boston/B-city"},
          {"ground_service", "is there a taxi service in denver/B-city in the morning/B-time"},
          {"ground_service", "car rental in dallas/B-city"},
          {"ground_service", "ground transportation in new/B-city york/I-city on tuesday/B-date"},
          {"ground_service", "car rental in san/B-city francisco/I-city"},
          {"flight", "list united/B-airline flights from dallas/B-city"},
          {"ground_service", "is there a taxi service in boston/B-city at noon/B-time"},
      },
      "memorization");
}

Corpus pittsburgh_fixture() {
  return from_rows(
      {
          {"flight_info",
           "what flights are available from pittsburgh/B-from_city to baltimore/B-to_city "
           "on thursday/B-depart_date morning/B-depart_time"},
          {"flight_info",
           "what flights are available from baltimore/B-from_city to pittsburgh/B-to_city "
           "on monday/B-depart_date evening/B-depart_time"},
          {"airfare", "what is the fare from pittsburgh/B-from_city to boston/B-to_city"},
          {"airfare", "what is the fare from boston/B-from_city to baltimore/B-to_city"},
          {"flight_info", "show flights from boston/B-from_city to pittsburgh/B-to_city"},
          {"ground_service", "ground transportation in baltimore/B-city_name"},
      },
      "pittsburgh");
}

Corpus tiny_corpus() {
  return from_rows(
      {
          {"flight", "show flights to new/B-city york/I-city"},
          {"airfare", "Fare to Boston/B-city"},
      },
      "tiny");
}

std::string to_native_text(const Corpus& corpus) {
  std::ostringstream out;
  write_native(corpus, out);
  return out.str();
}

EmbeddingTable random_embeddings(const Corpus& corpus, int dim, std::uint64_t seed) {
  EmbeddingTable table(dim, "random");
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (const Utterance& u : corpus.utterances) {
    for (const std::string& t : u.tokens) {
      if (table.find(t)) continue;
      for (float& x : v) x = normal(rng);
      table.insert(t, v);
    }
  }
  return table;
}

ContextualStore random_contextual(const Corpus& corpus, int dim, std::uint64_t seed) {
  ContextualStore store(dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (const Utterance& u : corpus.utterances) {
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
      for (float& x : v) x = normal(rng);
      store.insert(static_cast<std::uint32_t>(u.id), static_cast<std::uint16_t>(i), v);
    }
  }
  return store;
}

ModelConfig tiny_config(Variant variant, int word_dim) {
  ModelConfig c;
  c.variant = variant;
  c.word_dim = word_dim;
  c.char_emb_dim = 3;
  c.char_filters = 4;
  c.char_width = 3;
  c.hidden = 3;
  c.dropout_rate = 0.0;
  c.init_seed = 11;
  return c;
}

TempDir::TempDir() {
  static int counter = 0;
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("jointnlu-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace jointnlu::testing
