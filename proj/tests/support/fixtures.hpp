#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "fairsample/csv.hpp"

#ifndef FAIRSAMPLE_FIXTURES_DIR
#error "FAIRSAMPLE_FIXTURES_DIR must point at tests/fixtures"
#endif

namespace fixtures {

struct PublishedRow {
  int table = 0;
  std::string size;
  std::string strategy;
  std::vector<double> accuracies;  // percent, Caucasian, Indian, Asian, African
  double average = 0.0;
  double std_dev = 0.0;
  double ser = 0.0;
};

inline std::string path(const std::string& name) { return std::string(FAIRSAMPLE_FIXTURES_DIR) + "/" + name; }

inline std::vector<PublishedRow> published_accuracies() {
  std::ifstream in(path("published_accuracies.csv"));
  fairsample::csv::Reader reader(in);
  std::vector<std::string> f;
  reader.next(f);
  std::vector<PublishedRow> rows;
  while (reader.next(f)) {
    PublishedRow r;
    r.table = static_cast<int>(fairsample::csv::parse_int(f[0], "table"));
    r.size = f[1];
    r.strategy = f[2];
    for (int k = 3; k < 7; ++k) r.accuracies.push_back(fairsample::csv::parse_double(f[k], "accuracy"));
    r.average = fairsample::csv::parse_double(f[7], "average");
    r.std_dev = fairsample::csv::parse_double(f[8], "std");
    r.ser = fairsample::csv::parse_double(f[9], "ser");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace fixtures
