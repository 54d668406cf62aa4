#pragma once

#include <tsrl/common.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace tsrl {

struct IterationRow {
  int iteration = 0;
  double wall_ms = 0.0;
  int phase = 1;
  double mean_reward_teacher = std::nan("");
  double mean_reward_student = std::nan("");
  double tracking_teacher = std::nan("");
  double tracking_student = std::nan("");
  double terrain_level = 0.0;
  double ppo_loss_teacher = std::nan("");
  double ppo_loss_student = std::nan("");
  double value_loss = std::nan("");
  double rec_loss = std::nan("");
  double est_loss = std::nan("");
  double kl = std::nan("");
  double lr = 0.0;
  double entropy = std::nan("");
};

/// Append-only CSV, one flushed line per iteration so the file parses at any
/// intermediate point.
class MetricsWriter {
 public:
  static const char* header() {
    return "iteration,wall_ms,phase,mean_reward_teacher,mean_reward_student,"
           "tracking_teacher,tracking_student,terrain_level,ppo_loss_teacher,"
           "ppo_loss_student,value_loss,rec_loss,est_loss,kl,lr,entropy";
  }

  explicit MetricsWriter(const std::string& path) : os_(path, std::ios::trunc) {
    if (!os_) throw std::runtime_error("cannot open metrics file: " + path);
    os_ << header() << "\n";
    os_.flush();
  }

  void write(const IterationRow& r) {
    os_ << r.iteration << ',' << strfmt("%.17g", r.wall_ms) << ',' << r.phase;
    for (double v : {r.mean_reward_teacher, r.mean_reward_student,
                     r.tracking_teacher, r.tracking_student, r.terrain_level,
                     r.ppo_loss_teacher, r.ppo_loss_student, r.value_loss,
                     r.rec_loss, r.est_loss, r.kl, r.lr, r.entropy})
      os_ << ',' << strfmt("%.17g", v);
    os_ << '\n';
    os_.flush();
  }

 private:
  std::ofstream os_;
};

/// Minimal CSV reader for the files this project writes (no quoting).
inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open csv: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    size_t start = 0;
    while (true) {
      size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace tsrl
