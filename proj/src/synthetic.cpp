#include "seqtag/synthetic.hpp"

#include <random>
#include <set>
#include <sstream>

#include "seqtag/errors.hpp"
#include "seqtag/numeric.hpp"

namespace seqtag {

namespace {

struct Template {
  std::string text;  // slots written as {PER}, {LOC}, ...
};

const std::vector<Template>& templates() {
  static const std::vector<Template> t = {
      {"yesterday i met {PER} at the station"},
      {"{PER} said hello to everyone"},
      {"the interview with {PER} was long"},
      {"my friend {PER} plays chess"},
      {"we travelled to {LOC} last summer"},
      {"the weather in {LOC} is cold"},
      {"she was born in {LOC}"},
      {"flights to {LOC} were cancelled"},
      {"the band {GRP} released a song"},
      {"fans of {GRP} gathered outside"},
      {"{GRP} won the championship"},
      {"he joined {GRP} as a member"},
      {"shares of {CORP} rose sharply"},
      {"{CORP} announced quarterly earnings"},
      {"she works for {CORP} now"},
      {"the ceo of {CORP} resigned"},
      {"i bought a new {PROD} today"},
      {"the {PROD} costs too much"},
      {"reviews praised the {PROD} battery"},
      {"he repaired his {PROD} again"},
      {"they watched {CW} on tv"},
      {"the novel {CW} became a bestseller"},
      {"she directed the film {CW}"},
      {"we played {CW} all night"},
      {"{PER} moved to {LOC} recently"},
      {"{PER} is employed by {CORP}"},
      {"{GRP} performed the song {CW}"},
      {"{CORP} unveiled the {PROD} in {LOC}"},
  };
  return t;
}

std::string make_name(std::mt19937_64& rng) {
  static const char* onsets[] = {"b", "d", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  static const char* vowels[] = {"a", "e", "i", "o", "u"};
  const std::size_t syllables = 2 + rng() % 2;
  std::string w;
  for (std::size_t i = 0; i < syllables; ++i) {
    w += onsets[rng() % std::size(onsets)];
    w += vowels[rng() % std::size(vowels)];
  }
  if (rng() % 2) w += "n";
  w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

std::string pos_of(const std::string& word) {
  static const std::map<std::string, std::string> tags = {
      {"i", "PRP"},   {"we", "PRP"},    {"she", "PRP"},  {"he", "PRP"},   {"they", "PRP"},
      {"my", "PRP$"}, {"his", "PRP$"},  {"the", "DT"},   {"a", "DT"},     {"at", "IN"},
      {"to", "TO"},   {"with", "IN"},   {"in", "IN"},    {"of", "IN"},    {"for", "IN"},
      {"on", "IN"},   {"by", "IN"},     {"as", "IN"},    {"all", "DT"},   {"is", "VBZ"},
      {"was", "VBD"}, {"were", "VBD"},  {"now", "RB"},   {"again", "RB"}, {"today", "NN"},
      {"yesterday", "NN"}, {"sharply", "RB"}, {"recently", "RB"}, {"outside", "RB"},
      {"too", "RB"},  {"much", "JJ"},   {"long", "JJ"},  {"cold", "JJ"},  {"new", "JJ"},
      {"last", "JJ"}, {"quarterly", "JJ"}};
  auto it = tags.find(word);
  if (it != tags.end()) return it->second;
  if (word.size() > 2 && word.substr(word.size() - 2) == "ed") return "VBD";
  if (word.back() == 's') return "VBZ";
  return "NN";
}

Sentence render(const Template& tpl, const SyntheticCorpus& corpus, std::mt19937_64& rng,
                std::string id) {
  Sentence s;
  s.id = std::move(id);
  s.gold_tags.emplace();
  s.pos_tags.emplace();
  std::istringstream in(tpl.text);
  std::string word;
  while (in >> word) {
    if (word.front() == '{') {
      const auto type = *parse_entity_type(word.substr(1, word.size() - 2));
      const auto& dict = corpus.dictionaries.at(type);
      const auto& entity = dict[rng() % dict.size()];
      for (std::size_t i = 0; i < entity.size(); ++i) {
        s.tokens.push_back(entity[i]);
        s.gold_tags->push_back((i == 0 ? "B-" : "I-") + std::string(to_string(type)));
        s.pos_tags->push_back("NNP");
      }
    } else {
      s.tokens.push_back(word);
      s.gold_tags->push_back("O");
      s.pos_tags->push_back(pos_of(word));
    }
  }
  return s;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& options) {
  if (options.name_pool < 4) throw ConfigError("name pool must hold at least 4 words");
  std::mt19937_64 rng(mix_seed(options.seed));

  std::vector<std::string> pool;
  std::set<std::string> seen_words;
  while (pool.size() < options.name_pool) {
    std::string w = make_name(rng);
    if (seen_words.insert(w).second) pool.push_back(w);
  }

  SyntheticCorpus corpus;
  const std::size_t capacity = options.name_pool * options.name_pool;
  if (options.entities_per_class * kAllEntityTypes.size() > capacity)
    throw ConfigError("name pool too small for the requested dictionary size");
  std::set<std::vector<std::string>> used;
  for (EntityType type : kAllEntityTypes) {
    auto& dict = corpus.dictionaries[type];
    while (dict.size() < options.entities_per_class) {
      const std::size_t len = 1 + rng() % 3;
      std::vector<std::string> entity;
      for (std::size_t i = 0; i < len; ++i) entity.push_back(pool[rng() % pool.size()]);
      if (used.insert(entity).second) dict.push_back(std::move(entity));
    }
  }

  const auto& tpls = templates();
  for (std::size_t i = 0; i < options.train_sentences; ++i)
    corpus.train.push_back(
        render(tpls[rng() % tpls.size()], corpus, rng, "train-" + std::to_string(i)));
  for (std::size_t i = 0; i < options.dev_sentences; ++i)
    corpus.dev.push_back(render(tpls[rng() % tpls.size()], corpus, rng, "dev-" + std::to_string(i)));
  return corpus;
}

}  // namespace seqtag
