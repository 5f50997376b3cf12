(* while (x > 0) x = x - y *)
name cotermA;
vars x, y;
final x <= 0;
trans
  x > 0 and x' = x - y or
  x <= 0 and x' = x;
