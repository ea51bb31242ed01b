#pragma once

#include "mq/analytics.hpp"
#include "mq/chain.hpp"
#include "mq/choice.hpp"
#include "mq/ejp.hpp"
#include "mq/errors.hpp"
#include "mq/mqcore.hpp"
#include "mq/parallel.hpp"
#include "mq/rank_index.hpp"
#include "mq/sampling.hpp"
#include "mq/stats.hpp"
#include "mq/verify.hpp"
#include "mq/version.hpp"
