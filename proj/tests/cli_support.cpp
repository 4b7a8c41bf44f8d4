#include "cli_support.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>

#include "arctext/io.hpp"

namespace cli {

namespace {

std::filesystem::path capture_dir() {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() /
             ("arctext_cli_capture_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

}  // namespace

Result run(const std::string& args) {
  const auto out = capture_dir() / "stdout.txt", err = capture_dir() / "stderr.txt";
  const std::string command = std::string("'") + ARCTEXT_CLI + "' " + args + " > '" +
                              out.string() + "' 2> '" + err.string() + "'";
  const int raw = std::system(command.c_str());
  Result r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = arctext::io::read_text_file(out);
  r.err = arctext::io::read_text_file(err);
  return r;
}

Scratch::Scratch(const std::string& name)
    : dir_(std::filesystem::temp_directory_path() /
           ("arctext_" + name + "_" + std::to_string(::getpid()))) {
  std::filesystem::remove_all(dir_);
  std::filesystem::create_directories(dir_);
}

Scratch::~Scratch() {
  std::error_code ec;
  std::filesystem::remove_all(dir_, ec);
}

std::filesystem::path fixture_path(const std::string& relative) {
  return std::filesystem::path(ARCTEXT_FIXTURES) / relative;
}

std::string fixture(const std::string& relative) {
  return "'" + fixture_path(relative).string() + "'";
}

}  // namespace cli
