/*
 * Copyright 2026 The privcoll Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PRIVCOLL_SHARING_HPP_
#define PRIVCOLL_SHARING_HPP_

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "privcoll/error.hpp"
#include "privcoll/prg.hpp"
#include "privcoll/ring.hpp"

namespace privcoll {

// s additive shares of one secret; shares[i] is destined for node i + 1.
struct ShareSet {
  std::vector<RingTensor> shares;
  size_t rows = 0;
  size_t cols = 0;
};

// E^l: the ring sum of every share node l received (its own included).
struct ShareSum {
  int node_id = 0;
  RingTensor value;
};

// Shr. Shares 1..s-1 are uniform over the ring; the last closes the sum.
inline ShareSet Share(const RingTensor& secret, size_t parties, Prg& prg) {
  if (parties < 2) {
    Fail(ErrorCode::kInvalidPartyCount,
         "sharing needs at least 2 parties, got " + std::to_string(parties));
  }
  ShareSet set;
  set.rows = secret.rows();
  set.cols = secret.cols();
  set.shares.reserve(parties);
  const RingParams& params = secret.params();
  const uint64_t mask = params.mask();
  RingTensor last = secret;
  for (size_t p = 0; p + 1 < parties; ++p) {
    RingTensor share(secret.rows(), secret.cols(), params);
    for (size_t i = 0; i < share.size(); ++i) {
      share[i] = prg.NextU64() & mask;
      last[i] = (last[i] - share[i]) & mask;
    }
    set.shares.push_back(std::move(share));
  }
  set.shares.push_back(std::move(last));
  return set;
}

// Rec. Requires exactly one share sum per node id 1..parties; sums in node
// order (order is irrelevant in the ring, fixed for reproducibility).
inline RingTensor Reconstruct(std::vector<ShareSum> sums, size_t parties) {
  if (sums.empty() || parties == 0) {
    Fail(ErrorCode::kMissingShare, "no share sums");
  }
  std::sort(sums.begin(), sums.end(),
            [](const ShareSum& a, const ShareSum& b) {
              return a.node_id < b.node_id;
            });
  for (size_t l = 0; l < parties; ++l) {
    if (l >= sums.size() || sums[l].node_id != static_cast<int>(l + 1)) {
      Fail(ErrorCode::kMissingShare,
           "share sum for node " + std::to_string(l + 1) + " absent");
    }
  }
  if (sums.size() != parties) {
    Fail(ErrorCode::kMissingShare, "unexpected extra share sums");
  }
  RingTensor total = sums.front().value;
  for (size_t l = 1; l < sums.size(); ++l) RingAddInPlace(total, sums[l].value);
  return total;
}

// Sum of all shares in a set; equals the secret.
inline RingTensor SumShares(const ShareSet& set) {
  RingTensor total = set.shares.at(0);
  for (size_t i = 1; i < set.shares.size(); ++i) {
    RingAddInPlace(total, set.shares[i]);
  }
  return total;
}

// One complete sharing round over all nodes' secrets, run in a single place.
// Used by tests and the collusion demonstrator; the distributed engine
// performs the same steps across parties.
struct ShareRoundTranscript {
  std::vector<RingTensor> secrets;                  // index l-1: X^lW^l
  std::vector<std::vector<RingTensor>> received;    // [to-1][from-1]
  std::vector<ShareSum> share_sums;                 // one per node
  RingTensor total;                                 // Rec output
};

inline ShareRoundTranscript RunShareRound(std::vector<RingTensor> secrets,
                                          std::vector<Prg>& prgs) {
  const size_t s = secrets.size();
  ShareRoundTranscript tr;
  tr.received.assign(s, std::vector<RingTensor>(s));
  for (size_t from = 0; from < s; ++from) {
    ShareSet set = Share(secrets[from], s, prgs.at(from));
    for (size_t to = 0; to < s; ++to) tr.received[to][from] = set.shares[to];
  }
  for (size_t to = 0; to < s; ++to) {
    RingTensor sum = tr.received[to][0];
    for (size_t from = 1; from < s; ++from) {
      RingAddInPlace(sum, tr.received[to][from]);
    }
    tr.share_sums.push_back({static_cast<int>(to + 1), std::move(sum)});
  }
  tr.total = Reconstruct(tr.share_sums, s);
  tr.secrets = std::move(secrets);
  return tr;
}

}  // namespace privcoll

#endif  // PRIVCOLL_SHARING_HPP_
