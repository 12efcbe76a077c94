#include "dendromap/dendromap.h"

int c_header_smoke(void) {
  dm_layout_config config = dm_layout_config_default();
  dm_http_response response = {0, NULL, NULL, 0, NULL};
  dm_http_response_free(&response);
  return config.viewport_w > 0 && dm_status_name(DM_OK)[0] == 'o';
}
