// Copyright 2026 The nuqta authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License. You may
// obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Edit-distance based evaluation. Transcripts are compared at Unicode
// scalar granularity with no normalization; accuracy is computed corpus
// level (sums before division):
//
//   accuracy = (sum len(GT) - sum ED(Pred, GT)) / sum len(GT)
//
// which can go negative when the edit distance exceeds the ground-truth
// length. That is formula-faithful and intentional.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace nuqta {

using Codepoints = std::vector<uint32_t>;

// (prediction, ground truth)
using EvalPair = std::pair<Codepoints, Codepoints>;

// Levenshtein distance with unit insert/delete/substitute costs.
size_t edit_distance(const Codepoints& a, const Codepoints& b);

// Corpus-level character accuracy; contract error on empty ground truth.
double char_accuracy(const std::vector<EvalPair>& pairs);

struct CharStat {
  size_t hits = 0;
  size_t total = 0;
  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(hits) / total;
  }
};

// Character-level accuracy from the edit-distance backtrace. A ground-truth
// character counts as a hit iff it is aligned to an identical predicted
// character. Backtrace tie-breaking on equal cost prefers substitution over
// insertion over deletion, so reports are deterministic.
std::map<uint32_t, CharStat> per_char_accuracy(
    const std::vector<EvalPair>& pairs);

struct EvalReport {
  size_t total_gt_len = 0;
  size_t total_edit_distance = 0;
  double accuracy = 0.0;
  std::map<uint32_t, CharStat> per_char;

  // UTF-8 tabular text: one row per character plus a summary row.
  std::string to_tsv() const;
};

EvalReport evaluate(const std::vector<EvalPair>& pairs);

}  // namespace nuqta
