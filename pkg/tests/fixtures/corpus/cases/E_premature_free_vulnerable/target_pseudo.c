__int64 __fastcall process_request(__int64 a1, __int64 a2)
{
  unsigned int v2; // eax
  unsigned int v3; // ebx

  v2 = parse_header(*(_QWORD *)(a2 + 8), *(unsigned int *)(a2 + 16));
  v3 = v2;
  if ( (v2 & 0x80000000) != 0 )
  {
    log_error(a1, v2);
    return v3;
  }
  kfree(*(_QWORD *)(a2 + 8));
  v3 = dispatch(a1, a2);
  release_req(a2);
  return v3;
}
