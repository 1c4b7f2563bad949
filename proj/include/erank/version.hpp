#pragma once

#define ERANK_VERSION "1.0.0"
