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

#include "nuqta/metrics.hpp"

#include <algorithm>
#include <sstream>

#include "nuqta/common.hpp"

namespace nuqta {

size_t edit_distance(const Codepoints& a, const Codepoints& b) {
  const size_t n = a.size(), m = b.size();
  if (n == 0) return m;
  if (m == 0) return n;
  // Two rolling rows.
  std::vector<size_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = j;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= m; ++j) {
      const size_t sub = prev[j - 1] + (a[i - 1] != b[j - 1] ? 1 : 0);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double char_accuracy(const std::vector<EvalPair>& pairs) {
  size_t total_len = 0, total_ed = 0;
  for (const auto& [pred, gt] : pairs) {
    total_len += gt.size();
    total_ed += edit_distance(pred, gt);
  }
  if (total_len == 0)
    throw contract_error("char_accuracy: empty ground-truth corpus");
  return (static_cast<double>(total_len) - static_cast<double>(total_ed)) /
         static_cast<double>(total_len);
}

namespace {

// Full-matrix DP with backtrace; gt indexes rows, pred indexes columns.
// On equal cost the backtrace prefers substitution, then insertion (extra
// predicted character), then deletion (missing predicted character).
void align_pair(const Codepoints& pred, const Codepoints& gt,
                std::map<uint32_t, CharStat>& stats) {
  const size_t n = gt.size(), m = pred.size();
  std::vector<std::vector<size_t>> d(n + 1, std::vector<size_t>(m + 1));
  for (size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (gt[i - 1] != pred[j - 1] ? 1 : 0),
                          d[i - 1][j] + 1, d[i][j - 1] + 1});
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        d[i][j] == d[i - 1][j - 1] + (gt[i - 1] != pred[j - 1] ? 1 : 0)) {
      auto& s = stats[gt[i - 1]];
      s.total += 1;
      if (gt[i - 1] == pred[j - 1]) s.hits += 1;
      --i;
      --j;
    } else if (j > 0 && d[i][j] == d[i][j - 1] + 1) {
      --j;  // inserted predicted character, no GT counterpart
    } else {
      auto& s = stats[gt[i - 1]];
      s.total += 1;  // deleted GT character: counted, never a hit
      --i;
    }
  }
}

}  // namespace

std::map<uint32_t, CharStat> per_char_accuracy(
    const std::vector<EvalPair>& pairs) {
  std::map<uint32_t, CharStat> stats;
  for (const auto& [pred, gt] : pairs) align_pair(pred, gt, stats);
  return stats;
}

EvalReport evaluate(const std::vector<EvalPair>& pairs) {
  EvalReport r;
  for (const auto& [pred, gt] : pairs) {
    r.total_gt_len += gt.size();
    r.total_edit_distance += edit_distance(pred, gt);
  }
  if (r.total_gt_len == 0)
    throw contract_error("evaluate: empty ground-truth corpus");
  r.accuracy = (static_cast<double>(r.total_gt_len) -
                static_cast<double>(r.total_edit_distance)) /
               static_cast<double>(r.total_gt_len);
  r.per_char = per_char_accuracy(pairs);
  return r;
}

std::string EvalReport::to_tsv() const {
  std::ostringstream os;
  os << "char\thits\ttotal\taccuracy\n";
  for (const auto& [cp, s] : per_char) {
    os << utf8_encode_one(cp) << "\t" << s.hits << "\t" << s.total << "\t"
       << s.accuracy() << "\n";
  }
  os << "ALL\t" << (total_gt_len - std::min(total_edit_distance, total_gt_len))
     << "\t" << total_gt_len << "\t" << accuracy << "\n";
  return os.str();
}

}  // namespace nuqta
