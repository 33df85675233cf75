#pragma once

#include "evbet/betting.hpp"
#include "evbet/confseq.hpp"
#include "evbet/domain.hpp"
#include "evbet/error.hpp"
#include "evbet/evariables.hpp"
#include "evbet/game.hpp"
#include "evbet/iid_case.hpp"
#include "evbet/multiround.hpp"
#include "evbet/parallel.hpp"
