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

#ifndef PRIVCOLL_HPP_
#define PRIVCOLL_HPP_

#include "privcoll/audit.hpp"
#include "privcoll/config.hpp"
#include "privcoll/data_io.hpp"
#include "privcoll/error.hpp"
#include "privcoll/history.hpp"
#include "privcoll/model.hpp"
#include "privcoll/oracle.hpp"
#include "privcoll/params.hpp"
#include "privcoll/prg.hpp"
#include "privcoll/protocol.hpp"
#include "privcoll/ring.hpp"
#include "privcoll/rnn.hpp"
#include "privcoll/sharing.hpp"
#include "privcoll/tcp.hpp"
#include "privcoll/tensor.hpp"
#include "privcoll/transport.hpp"
#include "privcoll/wire.hpp"

#endif  // PRIVCOLL_HPP_
