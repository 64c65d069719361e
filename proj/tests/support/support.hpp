#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.hpp"
#include "refind/corpus.hpp"

namespace refind::test {

namespace fs = std::filesystem;

inline fs::path fixture_dir() { return fs::path(REFIND_FIXTURE_DIR); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("refind-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "refind");
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// One document per text, each fitting in a single chunk.
inline corpus::ChunkStore make_store(const fs::path& dir, const std::vector<std::string>& texts) {
  std::vector<corpus::RawDocument> docs;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    docs.push_back({"d" + std::to_string(i + 1), "", texts[i], "en"});
  }
  corpus::ChunkingConfig cfg;
  cfg.target_window = 1000;
  cfg.stride = 1000;
  cfg.max_chars = 100000;
  return corpus::ingest_corpus(docs, cfg, dir).store;
}

}  // namespace refind::test
