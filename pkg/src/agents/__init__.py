"""Online allocation policies."""