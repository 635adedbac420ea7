// Writes the template-based synthetic NER corpus as CoNLL files.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "seqtag/corpus.hpp"
#include "seqtag/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic NER corpus", "make_synthetic"};
  seqtag::SyntheticOptions opts;
  std::string out_dir = ".";
  app.add_option("--out-dir", out_dir, "directory for train.conll and dev.conll");
  app.add_option("--train", opts.train_sentences, "training sentences");
  app.add_option("--dev", opts.dev_sentences, "dev sentences");
  app.add_option("--entities-per-class", opts.entities_per_class, "dictionary size per class");
  app.add_option("--seed", opts.seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  const auto corpus = seqtag::generate_synthetic_corpus(opts);
  std::filesystem::create_directories(out_dir);
  for (const auto& [name, part] : {std::pair{"train.conll", &corpus.train},
                                   std::pair{"dev.conll", &corpus.dev}}) {
    const auto path = std::filesystem::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write " << path << '\n';
      return 2;
    }
    seqtag::write_conll(out, *part);
  }
  return 0;
}
