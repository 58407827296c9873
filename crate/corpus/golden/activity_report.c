void
genom_maneuver_activity_report(
  struct genom_component_data *self, 
  struct genom_activity *a)
{
  switch(a->sid) {
    case -1: return; /* permanent activity reports nothing */
    case MANEUVER_connect_port_RQSTID:
      genom_maneuver_connect_port_activity_report(
        self, 
        (struct genom_maneuver_connect_port_activity *)a);
      return;
    case MANEUVER_connect_service_RQSTID:
      genom_maneuver_connect_service_activity_report(
        self, 
        (struct genom_maneuver_connect_service_activity *)a);
      return;
    case MANEUVER_kill_RQSTID:
      genom_maneuver_kill_activity_report(
        self, 
        (struct genom_maneuver_kill_activity *)a);
      return;
    case MANEUVER_abort_RQSTID:
      genom_maneuver_abort_activity_report(
        self, 
        (struct genom_maneuver_abort_activity *)a);
      return;
    case MANEUVER_get_planner_RQSTID:
      genom_maneuver_get_planner_activity_report(
        self, 
        (struct genom_maneuver_get_planner_activity *)a);
      return;
    case MANEUVER_stop_RQSTID:
      genom_maneuver_stop_activity_report(
        self, 
        (struct genom_maneuver_stop_activity *)a);
      return;
    case MANEUVER_goto_RQSTID:
      genom_maneuver_goto_activity_report(
        self, 
        (struct genom_maneuver_goto_activity *)a);
      return;
    case MANEUVER_waypoint_RQSTID:
      genom_maneuver_waypoint_activity_report(
        self, 
        (struct genom_maneuver_waypoint_activity *)a);
      return;
  }
