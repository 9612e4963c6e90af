#pragma once

#include "k2v/audit.hpp"
#include "k2v/checklist.hpp"
#include "k2v/criteria_data.hpp"
#include "k2v/dataset.hpp"
#include "k2v/error.hpp"
#include "k2v/gateway.hpp"
#include "k2v/kg.hpp"
#include "k2v/log.hpp"
#include "k2v/pipeline.hpp"
#include "k2v/prompts.hpp"
#include "k2v/qa.hpp"
#include "k2v/reward.hpp"
#include "k2v/service.hpp"
#include "k2v/text.hpp"
