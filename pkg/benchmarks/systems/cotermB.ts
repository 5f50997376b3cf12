(* while (x > 0) x = x - 2*y *)
name cotermB;
vars x, y;
final x <= 0;
trans
  x > 0 and x' = x - 2*y or
  x <= 0 and x' = x;
